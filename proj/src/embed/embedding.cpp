#include "embed/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace vlct::embed {

void Embedding::check_normalized() const {
  if (!normalized) return;
  require(std::abs(values.norm() - 1.0) <= kUnitNormTolerance, errc::shape_mismatch,
          "embedding flagged normalized but norm deviates from 1");
}

Vector l2_normalize(const Vector& x) {
  const double n = x.norm();
  require(std::isfinite(n) && n > 1e-150, errc::zero_vector,
          "cannot normalize a zero vector");
  return x / n;
}

Embedding l2_normalize(const Embedding& x) {
  Embedding out;
  out.values = l2_normalize(x.values);
  out.normalized = true;
  return out;
}

Vector l2_normalize_backward(const Vector& grad_out, const Vector& y, double input_norm) {
  return (grad_out - y * grad_out.dot(y)) / input_norm;
}

Vector mean_pool(const Matrix& slice_embeddings) {
  require(slice_embeddings.cols() >= 1, errc::empty_input, "mean pooling needs >= 1 embedding");
  const int d = static_cast<int>(slice_embeddings.rows());
  const int s = static_cast<int>(slice_embeddings.cols());
  Vector out(d);
  std::vector<double> addends(s);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < s; ++j) addends[j] = slice_embeddings(i, j);
    std::sort(addends.begin(), addends.end());
    double sum = 0.0;
    for (double a : addends) sum += a;
    out[i] = sum / s;
  }
  return out;
}

Embedding aggregate_mean(const std::vector<Embedding>& embeddings) {
  require(!embeddings.empty(), errc::empty_input, "mean pooling needs >= 1 embedding");
  const int d = embeddings.front().dim();
  Matrix m(d, embeddings.size());
  for (std::size_t j = 0; j < embeddings.size(); ++j) {
    require(embeddings[j].dim() == d, errc::shape_mismatch, "mixed embedding dimensions");
    m.col(static_cast<int>(j)) = embeddings[j].values;
  }
  return Embedding{mean_pool(m), false};
}

double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u * M_SQRT1_2)); }

double gelu_grad(double u) {
  const double cdf = 0.5 * (1.0 + std::erf(u * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
  return cdf + u * pdf;
}

}  // namespace vlct::embed
