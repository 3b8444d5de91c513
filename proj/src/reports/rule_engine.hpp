#pragma once

#include <string>
#include <vector>

#include "reports/lexicon.hpp"
#include "reports/report_types.hpp"

namespace vlct::reports {

enum class ConceptGroup { kInflammation, kObjectiveFinding, kComplication };
enum class MentionContext { kPresent, kNegated, kUncertain, kHistorical };

const char* concept_group_name(ConceptGroup g);
const char* mention_context_name(MentionContext c);

struct TraceEntry {
  std::string concept_term;
  ConceptGroup group;
  std::string trigger;  // empty for present mentions without an acute trigger
  MentionContext context;
  std::string section;  // "impression" or "findings"
  int sentence = 0;
};

struct RuleResult {
  ActivityLabel label = ActivityLabel::kNormal;
  std::vector<TraceEntry> trace;
};

/// NegEx/ConText-style scoped classification.
///
/// Sentences are delimited by . ! ? ; and newlines. Within a sentence each
/// concept mention gets one context, checked in precedence order:
///   uncertain  - an uncertainty trigger occurs anywhere in the sentence
///   negated    - a negation trigger ends within 6 tokens before the mention
///   historical - a historical trigger precedes the mention and no acute
///                trigger co-occurs in the sentence
///   present    - otherwise
/// Decision: any inflammation/complication mention in present context is
/// abnormal; else any uncertain mention, or hedging with no present mention,
/// is possibly abnormal; else normal. Hedging means a study-quality marker or
/// an uncertainty trigger anywhere in the scanned text, concept or not. The
/// impression is scanned first and an impression-level abnormal decision
/// short-circuits the findings scan.
RuleResult rule_classify(const ReportDoc& doc, const RuleLexicon& lex);

}  // namespace vlct::reports
