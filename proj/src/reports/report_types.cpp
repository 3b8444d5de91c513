#include "reports/report_types.hpp"

#include "common/error.hpp"
#include "common/strutil.hpp"

namespace vlct::reports {

const char* activity_label_name(ActivityLabel l) {
  switch (l) {
    case ActivityLabel::kNormal: return "normal";
    case ActivityLabel::kPossiblyAbnormal: return "possibly abnormal";
    case ActivityLabel::kAbnormal: return "abnormal";
  }
  return "?";
}

ActivityLabel activity_label_from_ordinal(int ordinal) {
  require(ordinal >= 0 && ordinal <= 2, errc::invalid_config,
          "activity ordinal must be 0, 1, or 2");
  return static_cast<ActivityLabel>(ordinal);
}

std::string normalize_impression(const std::string& text) {
  std::string s = collapse_whitespace(to_lower(text));
  auto is_terminal = [](char c) { return c == '.' || c == '!' || c == ';'; };
  while (!s.empty() && (is_terminal(s.back()) || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace vlct::reports
