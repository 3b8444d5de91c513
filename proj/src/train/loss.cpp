#include "train/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "common/error.hpp"

namespace vlct::train {

void PositiveSets::validate() const {
  const int n = size();
  require(n >= 1, errc::empty_input, "positive sets are empty");
  for (int i = 0; i < n; ++i) {
    bool self = false;
    for (int j : sets[i]) {
      require(j >= 0 && j < n, errc::shape_mismatch, "positive index out of range");
      self |= (j == i);
    }
    require(self, errc::shape_mismatch, "every positive set must contain its own index");
  }
}

PositiveSets PositiveSets::singletons(int n) {
  PositiveSets p;
  p.sets.resize(n);
  for (int i = 0; i < n; ++i) p.sets[i] = {i};
  return p;
}

PositiveSets PositiveSets::all_mutual(int n) {
  PositiveSets p;
  p.sets.resize(n);
  for (int i = 0; i < n; ++i) {
    p.sets[i].resize(n);
    for (int j = 0; j < n; ++j) p.sets[i][j] = j;
  }
  return p;
}

PositiveSets build_positive_sets(const std::vector<std::string>& normalized_impressions) {
  const int n = static_cast<int>(normalized_impressions.size());
  require(n >= 1, errc::empty_input, "cannot build positive sets from an empty batch");
  std::map<std::string, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[normalized_impressions[i]].push_back(i);
  PositiveSets p;
  p.sets.resize(n);
  for (const auto& [text, members] : groups) {
    (void)text;
    for (int i : members) p.sets[i] = members;
  }
  p.validate();
  return p;
}

namespace {

/// log sum exp over the given indices of v, max-shifted.
double lse_subset(const Vector& v, const std::vector<int>& idx) {
  double m = v[idx.front()];
  for (int i : idx) m = std::max(m, v[i]);
  double s = 0.0;
  for (int i : idx) s += std::exp(v[i] - m);
  return m + std::log(s);
}

double lse_all(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

double multipositive_loss(const Matrix& similarity, const PositiveSets& positives, double tau) {
  return multipositive_loss_grad(similarity, positives, tau, nullptr, nullptr);
}

double multipositive_loss_grad(const Matrix& similarity, const PositiveSets& positives,
                               double tau, Matrix* grad_similarity, double* grad_log_tau) {
  require(std::isfinite(tau) && tau > 0.0, errc::invalid_temperature,
          "temperature must be positive and finite");
  positives.validate();
  const int n = positives.size();
  require(similarity.rows() == n && similarity.cols() == n, errc::shape_mismatch,
          "similarity matrix must be N x N for N positive sets");

  const Matrix z = similarity / tau;
  double total = 0.0;
  Matrix g;
  if (grad_similarity != nullptr) g = Matrix::Zero(n, n);
  const double coef = -1.0 / (2.0 * n * tau);  // d(total term)/ds prefactor

  for (int i = 0; i < n; ++i) {
    const Vector row = z.row(i).transpose();
    const Vector col = z.col(i);
    const double row_all = lse_all(row);
    const double col_all = lse_all(col);
    const double row_pos = lse_subset(row, positives.sets[i]);
    const double col_pos = lse_subset(col, positives.sets[i]);
    total += (row_pos - row_all) + (col_pos - col_all);

    if (grad_similarity != nullptr) {
      // d(row_pos - row_all)/dz_ik = r_k 1[k in P_i] - p_k
      for (int k = 0; k < n; ++k) {
        g(i, k) += coef * (-std::exp(row[k] - row_all));
        g(k, i) += coef * (-std::exp(col[k] - col_all));
      }
      for (int j : positives.sets[i]) {
        g(i, j) += coef * std::exp(row[j] - row_pos);
        g(j, i) += coef * std::exp(col[j] - col_pos);
      }
    }
  }

  const double loss = -total / (2.0 * n);
  if (grad_similarity != nullptr) *grad_similarity = g;
  if (grad_log_tau != nullptr) {
    require(grad_similarity != nullptr, errc::internal, "log-tau grad requires similarity grad");
    *grad_log_tau = -(grad_similarity->array() * similarity.array()).sum();
  }
  return loss;
}

}  // namespace vlct::train
