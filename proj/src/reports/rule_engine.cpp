#include "reports/rule_engine.hpp"

#include <algorithm>

#include "common/strutil.hpp"

namespace vlct::reports {

namespace {

constexpr int kNegationWindow = 6;  // trigger end at most this many tokens before the concept

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct TermHit {
  const std::string* term;
  int begin;  // first token index
  int end;    // last token index
};

std::vector<std::string> tokenize_term(const std::string& term) { return word_tokenize(term); }

void find_terms(const std::vector<std::string>& tokens, const std::vector<std::string>& terms,
                std::vector<TermHit>& hits) {
  for (const std::string& term : terms) {
    const std::vector<std::string> tt = tokenize_term(term);
    if (tt.empty() || tt.size() > tokens.size()) continue;
    for (std::size_t i = 0; i + tt.size() <= tokens.size(); ++i) {
      bool match = true;
      for (std::size_t j = 0; j < tt.size(); ++j) {
        if (tokens[i + j] != tt[j]) {
          match = false;
          break;
        }
      }
      if (match) {
        hits.push_back({&term, static_cast<int>(i), static_cast<int>(i + tt.size() - 1)});
      }
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const TermHit& a, const TermHit& b) { return a.begin < b.begin; });
}

struct SentenceScan {
  std::vector<TermHit> negation, uncertainty, historical, acute, hedging;
  std::vector<std::pair<TermHit, ConceptGroup>> concepts;
  bool has_acute() const { return !acute.empty(); }
};

SentenceScan scan_sentence(const std::vector<std::string>& tokens, const RuleLexicon& lex) {
  SentenceScan s;
  find_terms(tokens, lex.negation, s.negation);
  find_terms(tokens, lex.uncertainty, s.uncertainty);
  find_terms(tokens, lex.historical, s.historical);
  find_terms(tokens, lex.acute, s.acute);
  find_terms(tokens, lex.hedging, s.hedging);
  std::vector<TermHit> hits;
  for (auto [terms, group] :
       {std::pair{&lex.inflammation, ConceptGroup::kInflammation},
        std::pair{&lex.objective_findings, ConceptGroup::kObjectiveFinding},
        std::pair{&lex.complications, ConceptGroup::kComplication}}) {
    hits.clear();
    find_terms(tokens, *terms, hits);
    for (const TermHit& h : hits) s.concepts.push_back({h, group});
  }
  std::sort(s.concepts.begin(), s.concepts.end(),
            [](const auto& a, const auto& b) { return a.first.begin < b.first.begin; });
  return s;
}

struct Decision {
  bool any_present_disease = false;  // inflammation or complication in present context
  bool any_uncertain = false;
  bool any_present = false;  // any concept group in present context
  bool any_hedging = false;
};

ActivityLabel decide(const Decision& d) {
  if (d.any_present_disease) return ActivityLabel::kAbnormal;
  if (d.any_uncertain) return ActivityLabel::kPossiblyAbnormal;
  if (d.any_hedging && !d.any_present) return ActivityLabel::kPossiblyAbnormal;
  return ActivityLabel::kNormal;
}

void scan_section(const std::string& section_name, const std::string& text,
                  const RuleLexicon& lex, Decision& decision,
                  std::vector<TraceEntry>& trace) {
  const std::vector<std::string> sentences = split_sentences(text);
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const std::vector<std::string> tokens = word_tokenize(sentences[si]);
    if (tokens.empty()) continue;
    const SentenceScan scan = scan_sentence(tokens, lex);
    // hedged language counts even without a concept nearby: study-quality
    // markers and bare uncertainty triggers both mark the report as hedged
    if (!scan.hedging.empty() || !scan.uncertainty.empty()) decision.any_hedging = true;

    for (const auto& [hit, group] : scan.concepts) {
      MentionContext ctx = MentionContext::kPresent;
      std::string trigger;

      if (!scan.uncertainty.empty()) {
        ctx = MentionContext::kUncertain;
        trigger = *scan.uncertainty.front().term;
      } else {
        const TermHit* neg = nullptr;
        for (const TermHit& n : scan.negation) {
          if (n.end < hit.begin && hit.begin - n.end <= kNegationWindow) neg = &n;
        }
        if (neg != nullptr) {
          ctx = MentionContext::kNegated;
          trigger = *neg->term;
        } else {
          const TermHit* hist = nullptr;
          for (const TermHit& h : scan.historical) {
            if (h.end < hit.begin) hist = &h;
          }
          if (hist != nullptr && !scan.has_acute()) {
            ctx = MentionContext::kHistorical;
            trigger = *hist->term;
          } else if (scan.has_acute()) {
            trigger = *scan.acute.front().term;  // present/acute
          }
        }
      }

      if (ctx == MentionContext::kUncertain) decision.any_uncertain = true;
      if (ctx == MentionContext::kPresent) {
        decision.any_present = true;
        if (group != ConceptGroup::kObjectiveFinding) decision.any_present_disease = true;
      }
      trace.push_back({*hit.term, group, trigger, ctx, section_name, static_cast<int>(si)});
    }
  }
}

}  // namespace

const char* concept_group_name(ConceptGroup g) {
  switch (g) {
    case ConceptGroup::kInflammation: return "inflammation";
    case ConceptGroup::kObjectiveFinding: return "objective_finding";
    case ConceptGroup::kComplication: return "complication";
  }
  return "?";
}

const char* mention_context_name(MentionContext c) {
  switch (c) {
    case MentionContext::kPresent: return "present";
    case MentionContext::kNegated: return "negated";
    case MentionContext::kUncertain: return "uncertain";
    case MentionContext::kHistorical: return "historical";
  }
  return "?";
}

RuleResult rule_classify(const ReportDoc& doc, const RuleLexicon& lex) {
  lex.validate();
  RuleResult result;
  Decision decision;

  scan_section("impression", doc.impression, lex, decision, result.trace);
  if (decide(decision) == ActivityLabel::kAbnormal) {
    result.label = ActivityLabel::kAbnormal;
    return result;  // definite impression-level decision, findings not scanned
  }
  scan_section("findings", doc.findings, lex, decision, result.trace);
  result.label = decide(decision);
  return result;
}

}  // namespace vlct::reports
