#include "embed/attention_pool.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::embed {

AttentionPoolParams AttentionPoolParams::init(int dim, std::uint64_t seed, double sigma) {
  Rng rng(derive_seed(seed, "attention_pool"));
  AttentionPoolParams p;
  p.q.resize(dim);
  for (int i = 0; i < dim; ++i) p.q[i] = rng.normal(0.0, sigma);
  return p;
}

void AttentionPoolParams::validate() const {
  require(q.size() >= 1 && q.allFinite(), errc::invalid_config,
          "attention query must be finite and nonempty");
}

Vector attention_pool(const Matrix& slice_embeddings, const AttentionPoolParams& params,
                      AttentionPoolCache* cache) {
  require(slice_embeddings.cols() >= 1, errc::empty_input,
          "attention pooling needs >= 1 embedding");
  require(slice_embeddings.rows() == params.q.size(), errc::shape_mismatch,
          "query dimension does not match embeddings");
  params.validate();

  const double scale = 1.0 / std::sqrt(static_cast<double>(slice_embeddings.rows()));
  Vector logits = slice_embeddings.transpose() * params.q * scale;
  const double m = logits.maxCoeff();
  Vector alpha = (logits.array() - m).exp().matrix();
  alpha /= alpha.sum();

  if (cache != nullptr) {
    cache->inputs = slice_embeddings;
    cache->alpha = alpha;
  }
  return slice_embeddings * alpha;
}

Embedding aggregate_attention(const std::vector<Embedding>& embeddings,
                              const AttentionPoolParams& params, Vector* weights_out) {
  require(!embeddings.empty(), errc::empty_input, "attention pooling needs >= 1 embedding");
  const int d = embeddings.front().dim();
  Matrix m(d, embeddings.size());
  for (std::size_t j = 0; j < embeddings.size(); ++j) {
    require(embeddings[j].dim() == d, errc::shape_mismatch, "mixed embedding dimensions");
    m.col(static_cast<int>(j)) = embeddings[j].values;
  }
  AttentionPoolCache cache;
  Vector out = attention_pool(m, params, &cache);
  if (weights_out != nullptr) *weights_out = cache.alpha;
  return Embedding{std::move(out), false};
}

Matrix attention_pool_backward(const AttentionPoolCache& cache, const Vector& grad_out,
                               const AttentionPoolParams& params, AttentionPoolGrad& grad) {
  const Matrix& e = cache.inputs;
  const Vector& alpha = cache.alpha;
  const double scale = 1.0 / std::sqrt(static_cast<double>(e.rows()));

  // output = E * alpha
  Vector g_alpha = e.transpose() * grad_out;                       // S
  const double dot = alpha.dot(g_alpha);
  Vector g_logits = (alpha.array() * (g_alpha.array() - dot)).matrix();  // softmax backward

  if (grad.q.size() == 0) grad.q = Vector::Zero(e.rows());
  grad.q += e * g_logits * scale;

  Matrix g_e = grad_out * alpha.transpose();                       // d x S
  g_e += params.q * g_logits.transpose() * scale;
  return g_e;
}

}  // namespace vlct::embed
