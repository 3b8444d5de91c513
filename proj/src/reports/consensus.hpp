#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "reports/report_types.hpp"

namespace vlct::reports {

enum class Confidence { kAbstain = 0, kMedium = 1, kHigh = 2 };

const char* confidence_name(Confidence c);

struct TeacherVote {
  std::string teacher;
  ActivityLabel label;
};

struct ConsensusResult {
  std::optional<ActivityLabel> label;  // empty on abstain
  Confidence confidence = Confidence::kAbstain;
  std::vector<TeacherVote> votes;

  bool abstained() const { return !label.has_value(); }
};

/// Majority vote over exactly three teachers: unanimous -> High, two-of-three
/// -> Medium, all distinct -> Abstain. Permutation-invariant.
ConsensusResult consensus(const std::vector<TeacherVote>& votes);

/// Parses a teacher reply by scanning left to right for the first taxonomy
/// keyword; at each position "possibly abnormal" is tried before "abnormal"
/// before "normal" so substrings cannot capture. Throws UnparseableVote.
ActivityLabel parse_vote_reply(const std::string& reply);

}  // namespace vlct::reports
