#include "reports/lexicon.hpp"

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/strutil.hpp"

namespace vlct::reports {

namespace {

// Mirrors data/lexicon.txt; a unit test keeps the two in sync.
constexpr const char* kBuiltinLexicon = R"(# Rule lexicon for report activity classification.
# One lowercase term per line under a [section] header; '#' starts a comment.
# Multi-word terms match as token sequences.

[negation]
no
not
without
absence of
negative for
free of

[uncertainty]
possible
possibly
may represent
may reflect
cannot exclude
cannot rule out
suspicious for
suggestive of
question of
equivocal

[historical]
history of
prior
chronic
previously
known
longstanding

[acute]
active
acute
flare
new
worsening

[hedging]
limited study
limited evaluation
limited assessment
suboptimal
nondiagnostic
motion artifact
image quality
difficult to assess

[concepts.inflammation]
colitis
enteritis
ileitis
ileocolitis
proctitis
inflammation
inflammatory change
inflammatory changes
inflammatory bowel disease
crohn
crohns
ulcerative colitis

[concepts.objective_findings]
wall thickening
bowel wall thickening
mural thickening
mural enhancement
mucosal enhancement
hyperenhancement
submucosal edema
mesenteric edema
fat stranding
comb sign

[concepts.complications]
abscess
abscesses
fistula
fistulae
fistulas
stricture
strictures
perforation
obstruction
phlegmon
sinus tract
penetrating disease
)";

std::vector<std::string>* section_for(RuleLexicon& lex, const std::string& name) {
  if (name == "negation") return &lex.negation;
  if (name == "uncertainty") return &lex.uncertainty;
  if (name == "historical") return &lex.historical;
  if (name == "acute") return &lex.acute;
  if (name == "hedging") return &lex.hedging;
  if (name == "concepts.inflammation") return &lex.inflammation;
  if (name == "concepts.objective_findings") return &lex.objective_findings;
  if (name == "concepts.complications") return &lex.complications;
  return nullptr;
}

}  // namespace

void RuleLexicon::validate() const {
  const struct {
    const std::vector<std::string>* terms;
    const char* name;
  } sections[] = {
      {&negation, "negation"},       {&uncertainty, "uncertainty"},
      {&historical, "historical"},   {&acute, "acute"},
      {&inflammation, "concepts.inflammation"},
      {&objective_findings, "concepts.objective_findings"},
      {&complications, "concepts.complications"},
  };
  for (const auto& s : sections) {
    require(!s.terms->empty(), errc::invalid_config,
            std::string("lexicon section '") + s.name + "' is empty");
    for (const std::string& t : *s.terms) {
      require(!t.empty() && t == collapse_whitespace(to_lower(t)), errc::invalid_config,
              "lexicon term must be lowercase and whitespace-normalized: '" + t + "'");
    }
  }
}

RuleLexicon RuleLexicon::parse(const std::string& text) {
  RuleLexicon lex;
  std::vector<std::string>* current = nullptr;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;

    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = collapse_whitespace(line);
    if (line.empty()) continue;

    if (line.front() == '[' && line.back() == ']') {
      const std::string name = line.substr(1, line.size() - 2);
      current = section_for(lex, name);
      require(current != nullptr, errc::invalid_config, "unknown lexicon section: " + name);
      continue;
    }
    require(current != nullptr, errc::invalid_config, "lexicon term before any section header");
    current->push_back(to_lower(line));
  }
  lex.validate();
  return lex;
}

RuleLexicon RuleLexicon::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

const RuleLexicon& RuleLexicon::builtin() {
  static const RuleLexicon lex = parse(kBuiltinLexicon);
  return lex;
}

const char* RuleLexicon::builtin_text() { return kBuiltinLexicon; }

}  // namespace vlct::reports
