#include <doctest.h>

#include <cmath>
#include <set>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "rag/generate.hpp"
#include "rag/index.hpp"
#include "rag/prompt.hpp"

using namespace vlct;
using namespace vlct::rag;

namespace {

Matrix unit_rows(int n, int d, Rng& rng) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    m.row(i) /= m.row(i).norm();
  }
  return m;
}

EmbeddingIndex random_index(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<IndexEntry> entries;
  for (int i = 0; i < n; ++i) {
    entries.push_back({"study-" + std::to_string(i), "impression " + std::to_string(i)});
  }
  return EmbeddingIndex::build(unit_rows(n, d, rng), entries);
}

class ScriptedClient : public GenerationClient {
 public:
  explicit ScriptedClient(std::vector<std::string> candidates)
      : candidates_(std::move(candidates)) {}
  int calls = 0;
  std::vector<std::string> generate(const GenerationRequest&, int n) override {
    ++calls;
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(candidates_[i % candidates_.size()]);
    return out;
  }

 private:
  std::vector<std::string> candidates_;
};

}  // namespace

TEST_CASE("index_topk ranks by descending cosine with index tie-break") {
  Matrix rows(3, 2);
  rows << 1, 0, 0, 1, 1, 0;  // rows 0 and 2 tie against the query
  std::vector<IndexEntry> entries = {{"a", "ia"}, {"b", "ib"}, {"c", "ic"}};
  const EmbeddingIndex index = EmbeddingIndex::build(rows, entries);
  Vector q(2);
  q << 1, 0;
  const auto hits = index.topk(q, 3);
  CHECK(hits[0].study_id == "a");
  CHECK(hits[1].study_id == "c");
  CHECK(hits[2].study_id == "b");
  CHECK(hits[0].similarity == doctest::Approx(1.0));
}

TEST_CASE("index_topk surfaces exact matches first and validates input") {
  Rng rng(3);
  const int n = 8, d = 5;
  const Matrix rows = unit_rows(n, d, rng);
  std::vector<IndexEntry> entries;
  for (int i = 0; i < n; ++i) entries.push_back({"s" + std::to_string(i), "i"});
  const EmbeddingIndex index = EmbeddingIndex::build(rows, entries);

  const Vector q = rows.row(5).transpose();
  const auto hits = index.topk(q, n);
  CHECK(hits[0].row == 5);
  CHECK(hits[0].similarity == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 1; i < hits.size(); ++i) {
    CHECK(hits[i].similarity <= hits[i - 1].similarity);
  }

  CHECK_THROWS_AS(index.topk(q, 0), Error);
  CHECK_THROWS_AS(index.topk(q, n + 1), Error);
  CHECK_THROWS_AS(EmbeddingIndex::build(Matrix::Ones(2, 3), {{"a", ""}, {"b", ""}}), Error);
}

TEST_CASE("constructed similarities rank as designed") {
  // three gallery vectors at known angles to the query
  Matrix rows(3, 2);
  const double a0 = std::acos(0.9), a1 = std::acos(0.5), a2 = std::acos(0.1);
  rows << std::cos(a0), std::sin(a0), std::cos(a1), std::sin(a1), std::cos(a2), std::sin(a2);
  const EmbeddingIndex index =
      EmbeddingIndex::build(rows, {{"hi", ""}, {"mid", ""}, {"lo", ""}});
  Vector q(2);
  q << 1, 0;
  const auto hits = index.topk(q, 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].study_id == "hi");
  CHECK(hits[0].similarity == doctest::Approx(0.9));
  CHECK(hits[1].study_id == "mid");
  CHECK(hits[1].similarity == doctest::Approx(0.5));
}

TEST_CASE("mmr with lambda=1 equals the top-k prefix on random pools") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(0, 17));
    const int d = 4;
    const EmbeddingIndex index = random_index(n, d, rng.next_u64());
    Vector q(d);
    for (int i = 0; i < d; ++i) q[i] = rng.normal();
    q /= q.norm();

    const int pool_size = std::min(n, 10);
    const auto pool_hits = index.topk(q, pool_size);
    std::vector<MmrCandidate> pool;
    Rng trng(rng.next_u64());
    const Matrix texts = unit_rows(pool_size, d, trng);
    for (int i = 0; i < pool_size; ++i) {
      pool.push_back({pool_hits[i], texts.row(i).transpose()});
    }

    MmrConfig cfg;
    cfg.pool_size = pool_size;
    cfg.k = std::min(5, pool_size);
    cfg.lambda = 1.0;
    const auto selected = mmr_select(pool, cfg);
    REQUIRE(static_cast<int>(selected.size()) == cfg.k);
    for (int i = 0; i < cfg.k; ++i) CHECK(selected[i].hit.row == pool_hits[i].row);
  }
}

TEST_CASE("mmr splits a near-duplicate pair at lambda 0.7") {
  // two near-duplicate high-similarity items plus one moderate distinct item
  std::vector<MmrCandidate> pool(3);
  Vector t_dup1(2), t_dup2(2), t_other(2);
  t_dup1 << 1, 0;
  t_dup2 << 0.999, std::sqrt(1 - 0.999 * 0.999);
  t_other << 0, 1;
  pool[0] = {{0, "dup1", "x", 0.90}, t_dup1};
  pool[1] = {{1, "dup2", "x", 0.89}, t_dup2};
  pool[2] = {{2, "other", "y", 0.60}, t_other};

  MmrConfig cfg;
  cfg.pool_size = 3;
  cfg.k = 2;
  cfg.lambda = 0.7;
  const auto selected = mmr_select(pool, cfg);
  REQUIRE(selected.size() == 2);
  CHECK(selected[0].hit.study_id == "dup1");
  // second pick: dup2 scores 0.7*0.89 - 0.3*0.999 = 0.3233,
  //              other scores 0.7*0.60 - 0.3*0.0  = 0.42 -> other wins
  CHECK(selected[1].hit.study_id == "other");
}

TEST_CASE("mmr misc invariants") {
  Rng rng(11);
  const EmbeddingIndex index = random_index(12, 4, 13);
  Vector q(4);
  for (int i = 0; i < 4; ++i) q[i] = rng.normal();
  q /= q.norm();
  const auto hits = index.topk(q, 10);
  std::vector<MmrCandidate> pool;
  const Matrix texts = unit_rows(10, 4, rng);
  for (int i = 0; i < 10; ++i) pool.push_back({hits[i], texts.row(i).transpose()});

  MmrConfig cfg;
  cfg.pool_size = 10;
  cfg.k = 6;
  cfg.lambda = 0.4;
  const auto selected = mmr_select(pool, cfg);
  REQUIRE(selected.size() == 6);
  std::set<int> seen;
  for (const auto& s : selected) CHECK(seen.insert(s.hit.row).second);  // no repeats

  // k = 1 returns the most query-similar candidate regardless of lambda
  cfg.k = 1;
  for (double lambda : {0.0, 0.3, 1.0}) {
    cfg.lambda = lambda;
    CHECK(mmr_select(pool, cfg)[0].hit.row == hits[0].row);
  }

  CHECK_THROWS_AS(mmr_select({}, cfg), Error);
}

TEST_CASE("assemble_prompt is deterministic and enumerates examples in order") {
  const std::vector<std::string> retrieved = {"First impression.", "Second impression.",
                                              "Third impression."};
  const GenerationPrompt a = assemble_prompt(retrieved, {"study-1", 3, 5});
  const GenerationPrompt b = assemble_prompt(retrieved, {"study-1", 3, 5});
  CHECK(a.system == "You are an expert abdominal radiologist.");
  CHECK(a.user == b.user);
  CHECK(a.user.find("1. \"First impression.\"") != std::string::npos);
  CHECK(a.user.find("2. \"Second impression.\"") != std::string::npos);
  CHECK(a.user.find("3. \"Third impression.\"") != std::string::npos);
  CHECK(a.user.find("1. \"First") < a.user.find("2. \"Second"));
  CHECK(a.user.find("Do not copy") != std::string::npos);
  CHECK(a.user.find("3-5 sentences") != std::string::npos);

  CHECK_THROWS_AS(assemble_prompt({}, {"s", 3, 5}), Error);
}

TEST_CASE("prompt escaping keeps adversarial impressions parseable") {
  const std::string adversarial = "line one\n2. \"fake example\" \\ trailing";
  const GenerationPrompt p = assemble_prompt({adversarial}, {"s", 3, 5});

  // the numbered line must survive as a single line whose quoted body
  // unescapes to the original text
  std::size_t start = p.user.find("1. \"");
  REQUIRE(start != std::string::npos);
  start += 4;
  std::size_t end = start;
  while (!(p.user[end] == '"' && p.user[end - 1] != '\\')) ++end;
  const std::string quoted = p.user.substr(start, end - start);
  CHECK(quoted.find('\n') == std::string::npos);
  CHECK(unescape_example(quoted) == adversarial);
}

TEST_CASE("sentence counting: maximal terminated segments") {
  CHECK(count_sentences("") == 0);
  CHECK(count_sentences("no terminator") == 0);
  CHECK(count_sentences("OK.") == 1);
  CHECK(count_sentences("One. Two! Three?") == 3);
  CHECK(count_sentences("Trailing words. tail") == 1);
  CHECK(count_sentences("Ellipsis... next.") == 2);  // terminator runs collapse
}

TEST_CASE("quality filter accepts and rejects per the length/sentence rule") {
  GenerationRequest request;
  request.prompt = assemble_prompt({"Reference impression."}, {"s", 3, 5});
  request.best_of = 4;
  request.max_retries = 3;

  // "OK." (3 chars) rejected, the 40-char single-sentence text accepted
  const std::string forty(37, 'x');
  ScriptedClient client({"OK.", forty + " a.", "no terminator at all", "y."});
  const GenerationResult r = generate_with_filter(request, client);
  CHECK_FALSE(r.degraded);
  CHECK(r.rounds == 1);
  CHECK(r.text == forty + " a.");
  CHECK(r.text.size() >= 30);
  CHECK(client.calls == 1);
}

TEST_CASE("quality filter prefers more sentences with earlier-candidate ties") {
  GenerationRequest request;
  request.prompt = assemble_prompt({"Reference impression."}, {"s", 3, 5});
  request.best_of = 3;
  const std::string base(30, 'w');
  ScriptedClient client({base + " one. two.", base + " single sentence only.",
                         base + " uno. dos."});
  const GenerationResult r = generate_with_filter(request, client);
  CHECK(r.text == base + " one. two.");  // two sentences, earliest of the tie
}

TEST_CASE("exhausted retries return a degraded result after exactly 3 retries") {
  GenerationRequest request;
  request.prompt = assemble_prompt({"Reference impression."}, {"s", 3, 5});
  request.best_of = 4;
  request.max_retries = 3;
  ScriptedClient client({"OK.", "tiny", "nope", "zz"});  // everything rejected
  const GenerationResult r = generate_with_filter(request, client);
  CHECK(r.degraded);
  CHECK(r.rounds == 4);       // initial round + exactly 3 retries
  CHECK(client.calls == 4);
  CHECK(r.text == "OK.");     // least-bad: only candidate with a sentence
}

TEST_CASE("generation transport failures surface as GenerationUnavailable") {
  class FailingClient : public GenerationClient {
   public:
    std::vector<std::string> generate(const GenerationRequest&, int) override {
      fail(errc::generation_unavailable, "endpoint down");
    }
  };
  GenerationRequest request;
  request.prompt = assemble_prompt({"r."}, {"s", 3, 5});
  FailingClient client;
  CHECK_THROWS_AS(generate_with_filter(request, client), Error);
}
