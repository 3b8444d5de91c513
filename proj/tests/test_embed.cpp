#include <doctest.h>

#include <cstring>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "embed/attention_pool.hpp"
#include "embed/lite_transformer.hpp"
#include "embed/lora.hpp"
#include "embed/projector.hpp"
#include "embed/providers.hpp"
#include "reports/report_types.hpp"

using namespace vlct;
using namespace vlct::embed;

namespace {

std::vector<Embedding> random_embeddings(int count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Embedding> out(count);
  for (auto& e : out) {
    e.values.resize(dim);
    for (int i = 0; i < dim; ++i) e.values[i] = rng.normal();
  }
  return out;
}

encode::RgbSlice make_slice(int h, int w, float value) {
  encode::RgbSlice s;
  s.height = h;
  s.width = w;
  s.pixels.assign(static_cast<std::size_t>(h) * w * 3, value);
  return s;
}

}  // namespace

TEST_CASE("l2_normalize basics") {
  Embedding e;
  e.values.resize(2);
  e.values << 3.0, 4.0;
  const Embedding n = l2_normalize(e);
  CHECK(n.values[0] == doctest::Approx(0.6));
  CHECK(n.values[1] == doctest::Approx(0.8));
  CHECK(n.normalized);

  const Embedding again = l2_normalize(n);
  CHECK(std::abs(again.values[0] - n.values[0]) <= 1e-12);

  Embedding zero;
  zero.values = Vector::Zero(4);
  CHECK_THROWS_AS(l2_normalize(zero), Error);
}

TEST_CASE("mean pooling is bitwise permutation-invariant") {
  auto embs = random_embeddings(9, 16, 42);
  const Embedding base = aggregate_mean(embs);
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    for (std::size_t i = embs.size(); i > 1; --i) {
      std::swap(embs[i - 1], embs[rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
    }
    const Embedding shuffled = aggregate_mean(embs);
    CHECK(std::memcmp(base.values.data(), shuffled.values.data(),
                      sizeof(double) * base.values.size()) == 0);
  }
  CHECK_THROWS_AS(aggregate_mean({}), Error);
}

TEST_CASE("mean of one embedding is itself; simple arithmetic holds") {
  auto embs = random_embeddings(1, 8, 3);
  CHECK(aggregate_mean(embs).values == embs[0].values);

  Embedding a, b;
  a.values.resize(2);
  a.values << 1.0, 0.0;
  b.values.resize(2);
  b.values << 0.0, 1.0;
  const Embedding m = aggregate_mean({a, b});
  CHECK(m.values[0] == doctest::Approx(0.5));
  CHECK(m.values[1] == doctest::Approx(0.5));
}

TEST_CASE("attention pooling with zero query equals mean pooling") {
  const auto embs = random_embeddings(7, 24, 7);
  AttentionPoolParams params;
  params.q = Vector::Zero(24);
  Vector weights;
  const Embedding attn = aggregate_attention(embs, params, &weights);
  const Embedding mean = aggregate_mean(embs);
  CHECK((attn.values - mean.values).cwiseAbs().maxCoeff() <= 1e-9);
  for (int i = 0; i < weights.size(); ++i) {
    CHECK(weights[i] == doctest::Approx(1.0 / 7).epsilon(1e-12));
  }
}

TEST_CASE("attention weights live on the simplex") {
  const auto embs = random_embeddings(11, 16, 9);
  const AttentionPoolParams params = AttentionPoolParams::init(16, 5);
  Vector weights;
  aggregate_attention(embs, params, &weights);
  double sum = 0.0;
  for (int i = 0; i < weights.size(); ++i) {
    CHECK(weights[i] >= 0.0);
    sum += weights[i];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("attention pooling hand oracle in one dimension") {
  // d = 1, e = [1, 3], q = 1: alpha = softmax(1, 3), output = 2.7616
  Embedding e1, e2;
  e1.values.resize(1);
  e1.values << 1.0;
  e2.values.resize(1);
  e2.values << 3.0;
  AttentionPoolParams params;
  params.q.resize(1);
  params.q << 1.0;
  Vector weights;
  const Embedding out = aggregate_attention({e1, e2}, params, &weights);
  CHECK(weights[0] == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(weights[1] == doctest::Approx(0.8808).epsilon(1e-3));
  CHECK(out.values[0] == doctest::Approx(2.7616).epsilon(1e-4));
}

TEST_CASE("attention pooling of a single embedding returns it") {
  const auto embs = random_embeddings(1, 6, 10);
  const AttentionPoolParams params = AttentionPoolParams::init(6, 2);
  const Embedding out = aggregate_attention(embs, params);
  CHECK((out.values - embs[0].values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("permuting attention inputs permutes weights and keeps the output") {
  auto embs = random_embeddings(6, 12, 21);
  const AttentionPoolParams params = AttentionPoolParams::init(12, 22);
  Vector w_before;
  const Embedding before = aggregate_attention(embs, params, &w_before);
  std::reverse(embs.begin(), embs.end());
  Vector w_after;
  const Embedding after = aggregate_attention(embs, params, &w_after);
  CHECK((before.values - after.values).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 0; i < w_before.size(); ++i) {
    CHECK(w_before[i] == doctest::Approx(w_after[w_after.size() - 1 - i]).epsilon(1e-12));
  }
}

TEST_CASE("lora_apply follows W x + B A x") {
  // zero base, rank 1, B = e1, A = ones row, x = ones -> 3 * e1
  LoraAdapter ad;
  ad.a = Matrix::Ones(1, 3);
  ad.b = Matrix::Zero(3, 1);
  ad.b(0, 0) = 1.0;
  const auto zero_base = [](const Vector& x) { return Vector::Zero(x.size()).eval(); };
  const Vector out = lora_apply(zero_base, ad, Vector::Ones(3));
  CHECK(out[0] == doctest::Approx(3.0));
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 0.0);
}

TEST_CASE("lora zero-B adapter is exactly the base map") {
  const LoraAdapter ad = LoraAdapter::init(4, 4, 2, 77);  // B starts at zero
  CHECK(ad.b.isZero(0.0));
  Rng rng(5);
  Vector x(4);
  for (int i = 0; i < 4; ++i) x[i] = rng.normal();
  const Vector out = lora_identity_apply(ad, x);
  CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lora parameter count and rank invariants") {
  const LoraAdapter ad = LoraAdapter::init(4, 4, 1, 3);
  CHECK(ad.param_count() == 8);  // r * (d + k)
  CHECK_THROWS_AS(LoraAdapter::init(4, 4, 5, 3), Error);  // rank > min(d, k)
}

TEST_CASE("projector residual identity when the second map is zero") {
  ProjectorParams p = ProjectorParams::init(8, 8, 13);
  p.w2.setZero();
  p.b2.setZero();
  Rng rng(6);
  Vector x(8);
  for (int i = 0; i < 8; ++i) x[i] = rng.normal();
  const Vector y = projector_forward(x, p, false, 0, nullptr);
  CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projector eval mode is deterministic; train mode masks with the seed") {
  const ProjectorParams p = ProjectorParams::init(16, 16, 17, 0.02, 0.5);
  Rng rng(8);
  Vector x(16);
  for (int i = 0; i < 16; ++i) x[i] = rng.normal();

  const Vector a = projector_forward(x, p, false, 1, nullptr);
  const Vector b = projector_forward(x, p, false, 2, nullptr);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

  const Vector t1 = projector_forward(x, p, true, 5, nullptr);
  const Vector t2 = projector_forward(x, p, true, 5, nullptr);
  const Vector t3 = projector_forward(x, p, true, 6, nullptr);
  CHECK((t1 - t2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t1 - t3).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("projector of the zero vector follows the epsilon-guarded layer norm") {
  const ProjectorParams p = ProjectorParams::init(8, 8, 19);
  const Vector x = Vector::Zero(8);
  const Vector y = projector_forward(x, p, false, 0, nullptr);
  // LayerNorm(0) = beta (zero at init), so y = W2 gelu(b1) + b2 = 0 at zero biases
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);

  ProjectorParams p2 = p;
  p2.ln_beta.setConstant(0.3);
  const Vector y2 = projector_forward(x, p2, false, 0, nullptr);
  Vector expected = Vector::Zero(8);
  const Vector u = p2.w1 * p2.ln_beta + p2.b1;
  Vector h(u.size());
  for (int i = 0; i < u.size(); ++i) h[i] = gelu(u[i]);
  expected = p2.w2 * h + p2.b2;
  CHECK((y2 - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("projector stays finite over random inputs") {
  const ProjectorParams p = ProjectorParams::init(32, 32, 23);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x(32);
    for (int i = 0; i < 32; ++i) x[i] = rng.normal(0.0, std::pow(10.0, trial % 5));
    const Vector y = projector_forward(x, p, false, 0, nullptr);
    CHECK(y.allFinite());
  }
}

TEST_CASE("lite transformer determinism, shape, and slice-order sensitivity") {
  const int d = 8;
  const LiteTransformerParams params = LiteTransformerParams::init(d, 6, 4, 31);
  auto embs = random_embeddings(3, d, 37);

  const Embedding a = aggregate_lite_transformer(embs, params);
  const Embedding b = aggregate_lite_transformer(embs, params);
  CHECK(a.values == b.values);
  CHECK(a.values.size() == d);

  std::swap(embs[0], embs[2]);
  const Embedding c = aggregate_lite_transformer(embs, params);
  CHECK((a.values - c.values).cwiseAbs().maxCoeff() > 1e-12);
}

TEST_CASE("lite transformer enforces the positional table capacity") {
  const LiteTransformerParams params = LiteTransformerParams::init(8, 4, 4, 41);
  const auto embs = random_embeddings(5, 8, 43);
  CHECK_THROWS_AS(aggregate_lite_transformer(embs, params), Error);
  try {
    aggregate_lite_transformer(embs, params);
  } catch (const Error& e) {
    CHECK(e.code() == errc::too_many_slices);
  }
}

TEST_CASE("toy slice provider is deterministic and input-sensitive") {
  const ToySliceProvider provider(32, 99);
  const SliceRef ref{"s", encode::Plane::kAxial, 0};
  const auto zeros = make_slice(20, 24, 0.0f);
  const auto ones = make_slice(20, 24, 1.0f);
  const Vector a = provider.frozen_features(ref, zeros);
  const Vector b = provider.frozen_features(ref, zeros);
  const Vector c = provider.frozen_features(ref, ones);
  CHECK(a == b);
  CHECK((a - c).cwiseAbs().maxCoeff() > 1e-9);
  CHECK(a.size() == 32);
}

TEST_CASE("toy text provider keys off normalized content") {
  const ToyTextProvider provider(32, 7);
  const Vector a = provider.frozen_features("no acute findings");
  const Vector b = provider.frozen_features("no acute findings");
  CHECK(a == b);
  const Vector empty = provider.frozen_features("");
  CHECK(empty.allFinite());
  CHECK(empty.cwiseAbs().maxCoeff() == 0.0);  // zero counts project to zero
  // case/whitespace differences disappear after normalization upstream
  const Vector c =
      provider.frozen_features(reports::normalize_impression("  No   ACUTE findings. "));
  CHECK(a == c);
}

TEST_CASE("file-backed providers surface MissingEmbedding") {
  const auto dir = std::filesystem::temp_directory_path() / "vlct_test_store";
  std::filesystem::create_directories(dir);
  Vector v(4);
  v << 1, 2, 3, 4;
  write_slice_store(dir / "slices.jsonl",
                    {{SliceRef{"s1", encode::Plane::kAxial, 3}, v}});
  const FileBackedSliceProvider provider(dir / "slices.jsonl", 4);
  const auto dummy = make_slice(2, 2, 0.0f);
  CHECK(provider.frozen_features({"s1", encode::Plane::kAxial, 3}, dummy) == v);
  CHECK_THROWS_AS(provider.frozen_features({"s1", encode::Plane::kAxial, 4}, dummy), Error);

  write_text_store(dir / "texts.jsonl", {{text_store_key("stable exam"), v}});
  const FileBackedTextProvider texts(dir / "texts.jsonl", 4);
  CHECK(texts.frozen_features("stable exam") == v);
  CHECK_THROWS_AS(texts.frozen_features("different"), Error);
}
