#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "train/loss.hpp"

using namespace vlct;
using namespace vlct::train;

namespace {

/// Independent straightforward symmetric InfoNCE with diagonal positives.
/// Written directly from the definition, no shared code with the library path.
double infonce_reference(const Matrix& s, double tau) {
  const int n = static_cast<int>(s.rows());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double row_den = 0.0, col_den = 0.0;
    for (int k = 0; k < n; ++k) {
      row_den += std::exp(s(i, k) / tau);
      col_den += std::exp(s(k, i) / tau);
    }
    const double pos = std::exp(s(i, i) / tau);
    total += -0.5 * (std::log(pos / row_den) + std::log(pos / col_den));
  }
  return total / n;
}

Matrix random_similarity(int n, Rng& rng) {
  Matrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) = rng.uniform(-1.0, 1.0);
  }
  return s;
}

Matrix unit_columns(int d, int n, Rng& rng) {
  Matrix m(d, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) m(i, j) = rng.normal();
    m.col(j) /= m.col(j).norm();
  }
  return m;
}

}  // namespace

TEST_CASE("build_positive_sets partitions by exact normalized text") {
  const auto p = build_positive_sets({"a", "a", "b"});
  CHECK(p.sets[0] == std::vector<int>{0, 1});
  CHECK(p.sets[1] == std::vector<int>{0, 1});
  CHECK(p.sets[2] == std::vector<int>{2});

  const auto singles = build_positive_sets({"x", "y", "z"});
  for (int i = 0; i < 3; ++i) CHECK(singles.sets[i] == std::vector<int>{i});
}

TEST_CASE("positive sets form an equivalence relation on the batch") {
  Rng rng(3);
  std::vector<std::string> texts;
  for (int i = 0; i < 40; ++i) texts.push_back("t" + std::to_string(rng.uniform_int(0, 5)));
  const auto p = build_positive_sets(texts);
  for (int i = 0; i < 40; ++i) {
    bool self = false;
    for (int j : p.sets[i]) {
      self |= j == i;
      // symmetry
      bool back = false;
      for (int k : p.sets[j]) back |= k == i;
      CHECK(back);
    }
    CHECK(self);
  }
}

TEST_CASE("all-mutual positives give exactly zero loss") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 7));
    const Matrix s = random_similarity(n, rng);
    const double loss = multipositive_loss(s, PositiveSets::all_mutual(n), 0.07 + rng.uniform());
    CHECK(std::abs(loss) <= 1e-12);
  }
}

TEST_CASE("N=2 identity similarity with singletons equals ln(1 + 1/e)") {
  const Matrix s = Matrix::Identity(2, 2);
  const double loss = multipositive_loss(s, PositiveSets::singletons(2), 1.0);
  CHECK(loss == doctest::Approx(0.313262).epsilon(1e-6));
  CHECK(std::abs(loss - std::log(1.0 + std::exp(-1.0))) <= 1e-12);
}

TEST_CASE("singleton positives match the independent InfoNCE oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 7));
    const int d = 2 + static_cast<int>(rng.uniform_int(0, 14));
    const Matrix v = unit_columns(d, n, rng);
    const Matrix t = unit_columns(d, n, rng);
    const Matrix s = v.transpose() * t;
    const double tau = rng.uniform(0.05, 1.0);
    const double ours = multipositive_loss(s, PositiveSets::singletons(n), tau);
    const double reference = infonce_reference(s, tau);
    CHECK(std::abs(ours - reference) <= 1e-9);
  }
}

TEST_CASE("loss is nonnegative and zero only at saturated positives") {
  Rng rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 6));
    const Matrix s = random_similarity(n, rng);
    std::vector<std::string> texts;
    for (int i = 0; i < n; ++i) texts.push_back("c" + std::to_string(rng.uniform_int(0, 2)));
    const double loss = multipositive_loss(s, build_positive_sets(texts), 0.3);
    CHECK(loss >= 0.0);
  }
}

TEST_CASE("loss is invariant under joint relabeling of the batch") {
  Rng rng(31);
  const int n = 6;
  const Matrix s = random_similarity(n, rng);
  std::vector<std::string> texts = {"a", "b", "a", "c", "b", "a"};
  const double base = multipositive_loss(s, build_positive_sets(texts), 0.2);

  // apply the same permutation to rows, columns, and texts
  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Matrix sp(n, n);
  std::vector<std::string> tp(n);
  for (int i = 0; i < n; ++i) {
    tp[i] = texts[perm[i]];
    for (int j = 0; j < n; ++j) sp(i, j) = s(perm[i], perm[j]);
  }
  const double permuted = multipositive_loss(sp, build_positive_sets(tp), 0.2);
  CHECK(std::abs(base - permuted) <= 1e-12);
}

TEST_CASE("loss is invariant under (s, tau) -> (c s, c tau)") {
  Rng rng(37);
  const int n = 5;
  const Matrix s = random_similarity(n, rng);
  const auto p = build_positive_sets({"a", "a", "b", "c", "b"});
  const double base = multipositive_loss(s, p, 0.25);
  for (double c : {0.5, 2.0, 7.3}) {
    const double scaled = multipositive_loss(c * s, p, c * 0.25);
    CHECK(std::abs(base - scaled) <= 1e-10);
  }
}

TEST_CASE("enlarging a positive set never increases the loss") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(0, 5));
    const Matrix s = random_similarity(n, rng);
    PositiveSets p = PositiveSets::singletons(n);
    const double before = multipositive_loss(s, p, 0.3);
    // add one extra positive to a random row (kept symmetric for validity)
    const int i = static_cast<int>(rng.uniform_int(0, n - 1));
    int j = static_cast<int>(rng.uniform_int(0, n - 1));
    if (j == i) j = (j + 1) % n;
    p.sets[i].push_back(j);
    std::sort(p.sets[i].begin(), p.sets[i].end());
    p.sets[j].push_back(i);
    std::sort(p.sets[j].begin(), p.sets[j].end());
    const double after = multipositive_loss(s, p, 0.3);
    CHECK(after <= before + 1e-12);
  }
}

TEST_CASE("loss rejects invalid temperature and malformed sets") {
  const Matrix s = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(multipositive_loss(s, PositiveSets::singletons(2), 0.0), Error);
  CHECK_THROWS_AS(multipositive_loss(s, PositiveSets::singletons(2), -1.0), Error);
  PositiveSets bad;
  bad.sets = {{1}, {1}};  // first set misses its own index
  CHECK_THROWS_AS(multipositive_loss(s, bad, 1.0), Error);
}

TEST_CASE("analytic similarity gradient matches finite differences") {
  Rng rng(43);
  const int n = 5;
  Matrix s = random_similarity(n, rng);
  const auto p = build_positive_sets({"a", "b", "a", "c", "c"});
  const double tau = 0.3;

  Matrix grad;
  double grad_log_tau = 0.0;
  multipositive_loss_grad(s, p, tau, &grad, &grad_log_tau);

  const double h = 1e-6;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Matrix sp = s, sm = s;
      sp(i, j) += h;
      sm(i, j) -= h;
      const double fd =
          (multipositive_loss(sp, p, tau) - multipositive_loss(sm, p, tau)) / (2 * h);
      CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-5));
    }
  }

  const double fd_tau = (multipositive_loss(s, p, tau * std::exp(h)) -
                         multipositive_loss(s, p, tau * std::exp(-h))) /
                        (2 * h);
  CHECK(grad_log_tau == doctest::Approx(fd_tau).epsilon(1e-5));
}
