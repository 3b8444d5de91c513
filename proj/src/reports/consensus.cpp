#include "reports/consensus.hpp"

#include <array>

#include "common/error.hpp"
#include "common/strutil.hpp"

namespace vlct::reports {

const char* confidence_name(Confidence c) {
  switch (c) {
    case Confidence::kAbstain: return "abstain";
    case Confidence::kMedium: return "medium";
    case Confidence::kHigh: return "high";
  }
  return "?";
}

ConsensusResult consensus(const std::vector<TeacherVote>& votes) {
  require(votes.size() == 3, errc::wrong_vote_count, "consensus requires exactly three votes");
  ConsensusResult r;
  r.votes = votes;

  std::array<int, 3> tally{0, 0, 0};
  for (const TeacherVote& v : votes) ++tally[static_cast<int>(v.label)];

  for (int c = 0; c < 3; ++c) {
    if (tally[c] == 3) {
      r.label = static_cast<ActivityLabel>(c);
      r.confidence = Confidence::kHigh;
      return r;
    }
    if (tally[c] == 2) {
      r.label = static_cast<ActivityLabel>(c);
      r.confidence = Confidence::kMedium;
      return r;
    }
  }
  r.confidence = Confidence::kAbstain;  // all three distinct
  return r;
}

ActivityLabel parse_vote_reply(const std::string& reply) {
  const std::string text = to_lower(reply);
  static const std::array<std::pair<const char*, ActivityLabel>, 3> keywords = {{
      {"possibly abnormal", ActivityLabel::kPossiblyAbnormal},
      {"abnormal", ActivityLabel::kAbnormal},
      {"normal", ActivityLabel::kNormal},
  }};
  for (std::size_t i = 0; i < text.size(); ++i) {
    for (const auto& [kw, label] : keywords) {
      const std::string_view k(kw);
      if (text.compare(i, k.size(), k) == 0) return label;
    }
  }
  fail(errc::unparseable_vote, "no taxonomy keyword in teacher reply");
}

}  // namespace vlct::reports
