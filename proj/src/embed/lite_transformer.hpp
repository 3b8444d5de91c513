#pragma once

#include <cstdint>
#include <vector>

#include "embed/embedding.hpp"

namespace vlct::embed {

/// Single pre-norm transformer encoder layer with a learnable CLS token and
/// positional embeddings; the aggregated embedding is the CLS position of the
/// layer output. 4 heads and feed-forward width 4d by default.
struct LiteTransformerParams {
  Vector cls;  // d
  Matrix pos;  // d x (max_slices + 1); column 0 is the CLS position

  Matrix wq, wk, wv, wo;  // d x d
  Vector bq, bk, bv, bo;  // d
  Vector ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
  Matrix w1;  // ff x d
  Vector b1;
  Matrix w2;  // d x ff
  Vector b2;

  int heads = 4;
  double ln_eps = 1e-5;

  int dim() const { return static_cast<int>(cls.size()); }
  int max_slices() const { return static_cast<int>(pos.cols()) - 1; }
  void validate() const;

  static LiteTransformerParams init(int dim, int max_slices, int heads, std::uint64_t seed,
                                    double sigma = 0.02);
};

struct ColumnNormCache {
  Matrix norm;       // d x L, the pre-affine normalized values
  Vector inv_sigma;  // L
};

struct LiteTransformerCache {
  Matrix x0, x_hat1, q, k, v, concat, x1, x_hat2, u, h;
  std::vector<Matrix> attn;  // per-head row-softmax matrices, L x L
  ColumnNormCache ln1, ln2;
};

/// slice_embeddings: d x S (columns are slices). Throws TooManySlices when S
/// exceeds the positional table capacity.
Vector lite_transformer_forward(const Matrix& slice_embeddings,
                                const LiteTransformerParams& params,
                                LiteTransformerCache* cache = nullptr);

Embedding aggregate_lite_transformer(const std::vector<Embedding>& embeddings,
                                     const LiteTransformerParams& params);

struct LiteTransformerGrad {
  Vector cls;
  Matrix pos;
  Matrix wq, wk, wv, wo;
  Vector bq, bk, bv, bo;
  Vector ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

/// Returns dL/d(slice embeddings) and accumulates parameter gradients.
Matrix lite_transformer_backward(const LiteTransformerCache& cache, const Vector& grad_out,
                                 const LiteTransformerParams& params, LiteTransformerGrad& grad);

}  // namespace vlct::embed
