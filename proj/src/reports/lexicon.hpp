#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vlct::reports {

/// Trigger and concept term lists for the rule-based classifier. Terms are
/// lowercase, whitespace-normalized, possibly multi-word. The default lists
/// ship in data/lexicon.txt and are mirrored by builtin(); edit the file to
/// extend coverage.
struct RuleLexicon {
  std::vector<std::string> negation;
  std::vector<std::string> uncertainty;
  std::vector<std::string> historical;
  std::vector<std::string> acute;
  std::vector<std::string> hedging;  // study-quality / hedged-report markers

  std::vector<std::string> inflammation;
  std::vector<std::string> objective_findings;
  std::vector<std::string> complications;

  void validate() const;

  /// Parses the section-header format: `[section]` lines followed by one term
  /// per line; `#` starts a comment.
  static RuleLexicon load(const std::filesystem::path& path);
  static RuleLexicon parse(const std::string& text);

  /// Compiled-in copy of the shipped data file.
  static const RuleLexicon& builtin();
  static const char* builtin_text();
};

}  // namespace vlct::reports
