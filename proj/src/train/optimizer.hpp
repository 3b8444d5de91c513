#pragma once

#include <vector>

#include "train/model.hpp"

namespace vlct::train {

struct AdamWConfig {
  double lr = 5e-5;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam moments with decoupled weight decay. Decay applies only to blocks
/// flagged for it (weight matrices; never biases, norm parameters, or log tau).
class AdamW {
 public:
  explicit AdamW(const AdamWConfig& config) : cfg_(config) {}

  void step(const std::vector<ParamBlock>& params, const std::vector<ParamBlock>& grads);
  long steps_taken() const { return t_; }

 private:
  AdamWConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

/// Global L2 norm over all gradient blocks.
double gradient_norm(const std::vector<ParamBlock>& grads);

/// Scales gradients in place so the global norm is at most max_norm.
void clip_gradient_norm(const std::vector<ParamBlock>& grads, double max_norm);

/// Throws NonFiniteGradient if any entry is NaN or infinite.
void check_finite(const std::vector<ParamBlock>& grads);

}  // namespace vlct::train
