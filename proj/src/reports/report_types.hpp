#pragma once

#include <string>

namespace vlct::reports {

/// Three-class disease activity taxonomy on a fixed ordinal scale.
enum class ActivityLabel { kNormal = 0, kPossiblyAbnormal = 1, kAbnormal = 2 };

const char* activity_label_name(ActivityLabel l);
ActivityLabel activity_label_from_ordinal(int ordinal);

/// Lowercases, collapses whitespace runs, trims, and strips terminal sentence
/// punctuation (. ! ;). Identical outputs define the duplicate classes used by
/// the multi-positive loss and duplicate-aware retrieval.
std::string normalize_impression(const std::string& text);

struct ReportDoc {
  std::string study_id;
  std::string findings;
  std::string impression;
  std::string normalized_impression;

  static ReportDoc make(std::string study_id, std::string findings, std::string impression) {
    ReportDoc d;
    d.study_id = std::move(study_id);
    d.findings = std::move(findings);
    d.impression = std::move(impression);
    d.normalized_impression = normalize_impression(d.impression);
    return d;
  }
};

}  // namespace vlct::reports
