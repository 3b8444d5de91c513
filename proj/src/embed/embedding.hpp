#pragma once

#include <Eigen/Core>
#include <vector>

namespace vlct::embed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

constexpr int kDefaultDim = 512;
constexpr double kUnitNormTolerance = 1e-6;

struct Embedding {
  Vector values;
  bool normalized = false;

  int dim() const { return static_cast<int>(values.size()); }
  void check_normalized() const;
};

/// x / ||x||; throws ZeroVector on (numerically) zero input.
Embedding l2_normalize(const Embedding& x);
Vector l2_normalize(const Vector& x);

/// Backward of y = x/||x||: given dL/dy and the forward output y plus ||x||,
/// returns dL/dx = (g - (g.y) y) / ||x||.
Vector l2_normalize_backward(const Vector& grad_out, const Vector& y, double input_norm);

/// Componentwise arithmetic mean. The per-coordinate summation order is fixed
/// by sorting the addends, so the result is bitwise invariant under any
/// permutation of the inputs.
Embedding aggregate_mean(const std::vector<Embedding>& embeddings);
Vector mean_pool(const Matrix& slice_embeddings);  // columns are slices

/// Exact Gaussian-CDF GELU and its derivative.
double gelu(double u);
double gelu_grad(double u);

}  // namespace vlct::embed
