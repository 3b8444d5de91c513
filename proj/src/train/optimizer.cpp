#include "train/optimizer.hpp"

#include <cmath>

#include "common/error.hpp"

namespace vlct::train {

void AdamW::step(const std::vector<ParamBlock>& params, const std::vector<ParamBlock>& grads) {
  require(params.size() == grads.size(), errc::shape_mismatch,
          "parameter/gradient block mismatch");
  long total = 0;
  for (const auto& b : params) total += b.size;
  if (m_.empty()) {
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
  }
  require(static_cast<long>(m_.size()) == total, errc::shape_mismatch,
          "optimizer state does not match parameter count");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  long at = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamBlock& p = params[k];
    const ParamBlock& g = grads[k];
    require(p.size == g.size, errc::shape_mismatch, "block size mismatch");
    for (long i = 0; i < p.size; ++i, ++at) {
      if (p.decay && cfg_.weight_decay > 0.0) {
        p.data[i] -= cfg_.lr * cfg_.weight_decay * p.data[i];
      }
      m_[at] = cfg_.beta1 * m_[at] + (1.0 - cfg_.beta1) * g.data[i];
      v_[at] = cfg_.beta2 * v_[at] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
      const double m_hat = m_[at] / bc1;
      const double v_hat = v_[at] / bc2;
      p.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

double gradient_norm(const std::vector<ParamBlock>& grads) {
  double sq = 0.0;
  for (const auto& b : grads) {
    for (long i = 0; i < b.size; ++i) sq += b.data[i] * b.data[i];
  }
  return std::sqrt(sq);
}

void clip_gradient_norm(const std::vector<ParamBlock>& grads, double max_norm) {
  const double norm = gradient_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (const auto& b : grads) {
    for (long i = 0; i < b.size; ++i) b.data[i] *= scale;
  }
}

void check_finite(const std::vector<ParamBlock>& grads) {
  for (const auto& b : grads) {
    for (long i = 0; i < b.size; ++i) {
      require(std::isfinite(b.data[i]), errc::non_finite_gradient,
              "gradient contains NaN or Inf; aborting the step");
    }
  }
}

}  // namespace vlct::train
