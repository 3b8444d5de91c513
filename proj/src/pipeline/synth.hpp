#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pipeline/run_config.hpp"
#include "volume/volume.hpp"

namespace vlct::pipeline {

struct SynthStudy {
  std::string study_id;
  std::string patient_id;
  int label = 0;        // 0 normal, 1 possibly abnormal, 2 abnormal
  int template_id = 0;  // global template index
  std::string findings;
  std::string impression;
};

struct SynthResult {
  std::vector<SynthStudy> studies;
  std::filesystem::path manifest;
  std::filesystem::path reports;
  std::filesystem::path truth;
};

/// Class counts by largest-remainder rounding of n * distribution.
std::array<int, 3> largest_remainder_counts(int n, const std::array<double, 3>& distribution);

/// Rule-consistent impression/findings template pools, indexed globally
/// (normal templates first, then possibly abnormal, then abnormal).
struct ReportTemplate {
  int label;
  std::string impression;
  std::string findings;
};
const std::vector<ReportTemplate>& report_templates();

/// Generates the synthetic cohort: volumes with a class-dependent bright-ring
/// signal (plus a template-keyed marker blob so duplicate templates are
/// visually identifiable), rule-consistent reports, ground-truth labels, and
/// the ingestion manifest. Fully deterministic under the spec seed.
SynthResult synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace vlct::pipeline
