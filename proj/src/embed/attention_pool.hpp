#pragma once

#include <cstdint>

#include "embed/embedding.hpp"

namespace vlct::embed {

/// Attention pooling with a learnable query: alpha = softmax(q.e_i / sqrt(d)),
/// output = sum_i alpha_i e_i.
struct AttentionPoolParams {
  Vector q;
  static AttentionPoolParams init(int dim, std::uint64_t seed, double sigma = 0.02);
  void validate() const;
};

struct AttentionPoolCache {
  Matrix inputs;  // d x S
  Vector alpha;   // S
};

Vector attention_pool(const Matrix& slice_embeddings, const AttentionPoolParams& params,
                      AttentionPoolCache* cache = nullptr);

Embedding aggregate_attention(const std::vector<Embedding>& embeddings,
                              const AttentionPoolParams& params, Vector* weights_out = nullptr);

struct AttentionPoolGrad {
  Vector q;
};

/// Returns dL/dE (d x S) and accumulates dL/dq.
Matrix attention_pool_backward(const AttentionPoolCache& cache, const Vector& grad_out,
                               const AttentionPoolParams& params, AttentionPoolGrad& grad);

}  // namespace vlct::embed
