#include "embed/projector.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::embed {

void ProjectorParams::validate() const {
  require(w1.cols() == w2.rows() && w1.rows() == w2.cols(), errc::shape_mismatch,
          "projector maps must compose d->h->d");
  require(ln_gamma.size() == w1.cols() && ln_beta.size() == w1.cols(), errc::shape_mismatch,
          "layer norm parameters must match input dimension");
  require(b1.size() == w1.rows() && b2.size() == w2.rows(), errc::shape_mismatch,
          "projector bias shapes");
  require(dropout >= 0.0 && dropout < 1.0, errc::invalid_config, "dropout must be in [0, 1)");
}

ProjectorParams ProjectorParams::init(int dim, int hidden, std::uint64_t seed, double sigma,
                                      double dropout) {
  ProjectorParams p;
  p.ln_gamma = Vector::Ones(dim);
  p.ln_beta = Vector::Zero(dim);
  p.w1.resize(hidden, dim);
  p.b1 = Vector::Zero(hidden);
  p.w2.resize(dim, hidden);
  p.b2 = Vector::Zero(dim);
  p.dropout = dropout;
  Rng rng(derive_seed(seed, "projector"));
  for (int i = 0; i < hidden; ++i) {
    for (int j = 0; j < dim; ++j) p.w1(i, j) = rng.normal(0.0, sigma);
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < hidden; ++j) p.w2(i, j) = rng.normal(0.0, sigma);
  }
  p.validate();
  return p;
}

Vector projector_forward(const Vector& x, const ProjectorParams& params, bool train_mode,
                         std::uint64_t seed, ProjectorCache* cache) {
  params.validate();
  const int d = static_cast<int>(params.ln_gamma.size());
  require(x.size() == d, errc::shape_mismatch, "projector input dimension mismatch");

  const double mu = x.mean();
  const Vector centered = (x.array() - mu).matrix();
  const double var = centered.squaredNorm() / d;
  const double inv_sigma = 1.0 / std::sqrt(var + params.ln_eps);
  const Vector norm_x = centered * inv_sigma;
  const Vector x_hat = (params.ln_gamma.array() * norm_x.array() + params.ln_beta.array()).matrix();

  const Vector u = params.w1 * x_hat + params.b1;
  Vector h(u.size());
  for (int i = 0; i < u.size(); ++i) h[i] = gelu(u[i]);
  const Vector mlp_out = params.w2 * h + params.b2;

  Vector mask = Vector::Ones(d);
  if (train_mode && params.dropout > 0.0) {
    Rng rng(derive_seed(seed, "dropout"));
    const double keep_scale = 1.0 / (1.0 - params.dropout);
    for (int i = 0; i < d; ++i) {
      mask[i] = rng.uniform() < params.dropout ? 0.0 : keep_scale;
    }
  }

  const Vector y = x + mask.cwiseProduct(mlp_out);
  if (cache != nullptr) {
    cache->x = x;
    cache->norm_x = norm_x;
    cache->x_hat = x_hat;
    cache->u = u;
    cache->h = h;
    cache->mlp_out = mlp_out;
    cache->mask = mask;
    cache->inv_sigma = inv_sigma;
  }
  return y;
}

Embedding project(const Embedding& x, const ProjectorParams& params, bool train_mode,
                  std::uint64_t seed) {
  return Embedding{projector_forward(x.values, params, train_mode, seed), false};
}

Vector projector_backward(const ProjectorCache& cache, const Vector& grad_out,
                          const ProjectorParams& params, ProjectorGrad& grad) {
  const int d = static_cast<int>(params.ln_gamma.size());
  if (grad.ln_gamma.size() == 0) {
    grad.ln_gamma = Vector::Zero(d);
    grad.ln_beta = Vector::Zero(d);
    grad.w1 = Matrix::Zero(params.w1.rows(), params.w1.cols());
    grad.b1 = Vector::Zero(params.b1.size());
    grad.w2 = Matrix::Zero(params.w2.rows(), params.w2.cols());
    grad.b2 = Vector::Zero(params.b2.size());
  }

  const Vector g_mlp = grad_out.cwiseProduct(cache.mask);
  grad.w2 += g_mlp * cache.h.transpose();
  grad.b2 += g_mlp;
  const Vector g_h = params.w2.transpose() * g_mlp;
  Vector g_u(g_h.size());
  for (int i = 0; i < g_h.size(); ++i) g_u[i] = g_h[i] * gelu_grad(cache.u[i]);
  grad.w1 += g_u * cache.x_hat.transpose();
  grad.b1 += g_u;
  const Vector g_xhat = params.w1.transpose() * g_u;

  grad.ln_gamma += g_xhat.cwiseProduct(cache.norm_x);
  grad.ln_beta += g_xhat;
  const Vector g_n = g_xhat.cwiseProduct(params.ln_gamma);

  // LayerNorm backward with biased variance
  const double mean_gn = g_n.mean();
  const double mean_gn_n = g_n.cwiseProduct(cache.norm_x).mean();
  Vector g_x = cache.inv_sigma *
               (g_n.array() - mean_gn - cache.norm_x.array() * mean_gn_n).matrix();

  g_x += grad_out;  // residual path
  return g_x;
}

}  // namespace vlct::embed
