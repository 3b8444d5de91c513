#include "embed/lora.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::embed {

void LoraAdapter::validate() const {
  require(rank() >= 1, errc::invalid_config, "adapter rank must be >= 1");
  require(rank() <= std::min(out_dim(), in_dim()), errc::invalid_config,
          "adapter rank must not exceed min(d, k)");
  require(b.cols() == a.rows(), errc::shape_mismatch, "B columns must equal A rows");
  require(a.allFinite() && b.allFinite(), errc::invalid_config, "adapter has non-finite entries");
}

LoraAdapter LoraAdapter::init(int out_dim, int in_dim, int rank, std::uint64_t seed,
                              double sigma) {
  LoraAdapter ad;
  ad.a.resize(rank, in_dim);
  ad.b = Matrix::Zero(out_dim, rank);
  Rng rng(derive_seed(seed, "lora"));
  for (int i = 0; i < rank; ++i) {
    for (int j = 0; j < in_dim; ++j) ad.a(i, j) = rng.normal(0.0, sigma);
  }
  ad.validate();
  return ad;
}

Vector lora_apply(const std::function<Vector(const Vector&)>& base, const LoraAdapter& adapter,
                  const Vector& x) {
  adapter.validate();
  require(x.size() == adapter.in_dim(), errc::shape_mismatch,
          "input dimension does not match adapter");
  return base(x) + adapter.b * (adapter.a * x);
}

Vector lora_identity_apply(const LoraAdapter& adapter, const Vector& x) {
  adapter.validate();
  require(x.size() == adapter.in_dim() && adapter.out_dim() == adapter.in_dim(),
          errc::shape_mismatch, "identity-base adapter requires square shapes");
  return x + adapter.b * (adapter.a * x);
}

Matrix lora_identity_apply(const LoraAdapter& adapter, const Matrix& x) {
  adapter.validate();
  require(x.rows() == adapter.in_dim() && adapter.out_dim() == adapter.in_dim(),
          errc::shape_mismatch, "identity-base adapter requires square shapes");
  return x + adapter.b * (adapter.a * x);
}

Matrix lora_identity_backward(const LoraAdapter& adapter, const Matrix& x,
                              const Matrix& grad_out, LoraGrad& grad) {
  if (grad.a.size() == 0) grad.a = Matrix::Zero(adapter.a.rows(), adapter.a.cols());
  if (grad.b.size() == 0) grad.b = Matrix::Zero(adapter.b.rows(), adapter.b.cols());
  // e = x + B A x
  grad.b += grad_out * (adapter.a * x).transpose();
  grad.a += adapter.b.transpose() * grad_out * x.transpose();
  return grad_out + adapter.a.transpose() * (adapter.b.transpose() * grad_out);
}

}  // namespace vlct::embed
