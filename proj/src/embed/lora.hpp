#pragma once

#include <cstdint>
#include <functional>

#include "embed/embedding.hpp"

namespace vlct::embed {

/// Additive low-rank update to a frozen linear map: W' = W + B A with
/// B in R^{d x r}, A in R^{r x k}. The base map is never modified.
struct LoraAdapter {
  Matrix a;  // r x k
  Matrix b;  // d x r

  int rank() const { return static_cast<int>(a.rows()); }
  int in_dim() const { return static_cast<int>(a.cols()); }
  int out_dim() const { return static_cast<int>(b.rows()); }
  long param_count() const { return static_cast<long>(rank()) * (out_dim() + in_dim()); }

  void validate() const;

  /// A is seeded Gaussian (sigma), B starts at zero so the adapted map equals
  /// the base map at initialization.
  static LoraAdapter init(int out_dim, int in_dim, int rank, std::uint64_t seed,
                          double sigma = 0.02);
};

/// base(x) + B (A x). `base` applies the frozen map W.
Vector lora_apply(const std::function<Vector(const Vector&)>& base, const LoraAdapter& adapter,
                  const Vector& x);

/// Identity-base adapted map, the attachment point used by the toy providers:
/// e = x + B (A x).
Vector lora_identity_apply(const LoraAdapter& adapter, const Vector& x);
Matrix lora_identity_apply(const LoraAdapter& adapter, const Matrix& x);

struct LoraGrad {
  Matrix a;
  Matrix b;
};

/// Backward of e = x + B(Ax) applied columnwise: accumulates dL/dA, dL/dB and
/// returns dL/dx.
Matrix lora_identity_backward(const LoraAdapter& adapter, const Matrix& x,
                              const Matrix& grad_out, LoraGrad& grad);

}  // namespace vlct::embed
