#pragma once

#include <cstdint>

#include "embed/embedding.hpp"

namespace vlct::embed {

/// Residual projector: y = x + Dropout(W2 . GELU(W1 . LayerNorm(x) + b1) + b2).
/// LayerNorm has learnable gain/bias and epsilon guard; dropout is inverted
/// (mask scaled by 1/(1-p)) and active only in train mode with a seeded mask.
struct ProjectorParams {
  Vector ln_gamma, ln_beta;
  Matrix w1;  // h x d
  Vector b1;  // h
  Matrix w2;  // d x h
  Vector b2;  // d
  double dropout = 0.1;
  double ln_eps = 1e-5;

  int dim() const { return static_cast<int>(w2.rows()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  void validate() const;
  static ProjectorParams init(int dim, int hidden, std::uint64_t seed, double sigma = 0.02,
                              double dropout = 0.1);
};

struct ProjectorCache {
  Vector x, norm_x, x_hat, u, h, mlp_out;
  Vector mask;  // dropout keep-scale per coordinate (all ones in eval mode)
  double inv_sigma = 0.0;
};

/// Forward pass. `train_mode` draws the dropout mask from `seed`; eval mode is
/// deterministic with dropout off.
Vector projector_forward(const Vector& x, const ProjectorParams& params, bool train_mode,
                         std::uint64_t seed, ProjectorCache* cache = nullptr);

Embedding project(const Embedding& x, const ProjectorParams& params, bool train_mode,
                  std::uint64_t seed);

struct ProjectorGrad {
  Vector ln_gamma, ln_beta;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

/// Returns dL/dx and accumulates parameter gradients.
Vector projector_backward(const ProjectorCache& cache, const Vector& grad_out,
                          const ProjectorParams& params, ProjectorGrad& grad);

}  // namespace vlct::embed
