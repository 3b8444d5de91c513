#include "embed/lite_transformer.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::embed {

namespace {

Matrix gaussian_matrix(int rows, int cols, Rng& rng, double sigma) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, sigma);
  }
  return m;
}

/// Column-wise LayerNorm with affine parameters.
Matrix column_norm_forward(const Matrix& x, const Vector& gamma, const Vector& beta, double eps,
                           ColumnNormCache& cache) {
  const int d = static_cast<int>(x.rows());
  const int l = static_cast<int>(x.cols());
  cache.norm.resize(d, l);
  cache.inv_sigma.resize(l);
  Matrix out(d, l);
  for (int c = 0; c < l; ++c) {
    const double mu = x.col(c).mean();
    const Vector centered = (x.col(c).array() - mu).matrix();
    const double var = centered.squaredNorm() / d;
    const double inv_sigma = 1.0 / std::sqrt(var + eps);
    cache.inv_sigma[c] = inv_sigma;
    cache.norm.col(c) = centered * inv_sigma;
    out.col(c) = (gamma.array() * cache.norm.col(c).array() + beta.array()).matrix();
  }
  return out;
}

/// Backward through the affine + normalization; accumulates gamma/beta grads.
Matrix column_norm_backward(const Matrix& grad_out, const ColumnNormCache& cache,
                            const Vector& gamma, Vector& g_gamma, Vector& g_beta) {
  const int d = static_cast<int>(grad_out.rows());
  const int l = static_cast<int>(grad_out.cols());
  Matrix g_x(d, l);
  for (int c = 0; c < l; ++c) {
    g_gamma += grad_out.col(c).cwiseProduct(cache.norm.col(c));
    g_beta += grad_out.col(c);
    const Vector g_n = grad_out.col(c).cwiseProduct(gamma);
    const double mean_gn = g_n.mean();
    const double mean_gn_n = g_n.cwiseProduct(cache.norm.col(c)).mean();
    g_x.col(c) = cache.inv_sigma[c] *
                 (g_n.array() - mean_gn - cache.norm.col(c).array() * mean_gn_n).matrix();
  }
  return g_x;
}

}  // namespace

void LiteTransformerParams::validate() const {
  const int d = dim();
  require(d >= 1 && heads >= 1 && d % heads == 0, errc::invalid_config,
          "model dimension must be divisible by the head count");
  require(pos.rows() == d && pos.cols() >= 2, errc::invalid_config,
          "positional table must cover the CLS position plus at least one slice");
  require(wq.rows() == d && wq.cols() == d && wk.rows() == d && wv.rows() == d &&
              wo.rows() == d,
          errc::shape_mismatch, "attention projection shapes");
  require(w1.cols() == d && w2.rows() == d && w1.rows() == w2.cols(), errc::shape_mismatch,
          "feed-forward shapes");
}

LiteTransformerParams LiteTransformerParams::init(int dim, int max_slices, int heads,
                                                  std::uint64_t seed, double sigma) {
  Rng rng(derive_seed(seed, "lite_transformer"));
  LiteTransformerParams p;
  p.heads = heads;
  p.cls = gaussian_matrix(dim, 1, rng, sigma).col(0);
  p.pos = gaussian_matrix(dim, max_slices + 1, rng, sigma);
  p.wq = gaussian_matrix(dim, dim, rng, sigma);
  p.wk = gaussian_matrix(dim, dim, rng, sigma);
  p.wv = gaussian_matrix(dim, dim, rng, sigma);
  p.wo = gaussian_matrix(dim, dim, rng, sigma);
  p.bq = Vector::Zero(dim);
  p.bk = Vector::Zero(dim);
  p.bv = Vector::Zero(dim);
  p.bo = Vector::Zero(dim);
  p.ln1_gamma = Vector::Ones(dim);
  p.ln1_beta = Vector::Zero(dim);
  p.ln2_gamma = Vector::Ones(dim);
  p.ln2_beta = Vector::Zero(dim);
  const int ff = 4 * dim;
  p.w1 = gaussian_matrix(ff, dim, rng, sigma);
  p.b1 = Vector::Zero(ff);
  p.w2 = gaussian_matrix(dim, ff, rng, sigma);
  p.b2 = Vector::Zero(dim);
  p.validate();
  return p;
}

Vector lite_transformer_forward(const Matrix& slice_embeddings,
                                const LiteTransformerParams& params,
                                LiteTransformerCache* cache) {
  params.validate();
  const int d = params.dim();
  const int s = static_cast<int>(slice_embeddings.cols());
  require(s >= 1, errc::empty_input, "lite transformer needs >= 1 embedding");
  require(slice_embeddings.rows() == d, errc::shape_mismatch, "embedding dimension mismatch");
  require(s <= params.max_slices(), errc::too_many_slices,
          "slice count exceeds the positional table");

  const int l = s + 1;
  const int dh = d / params.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix x0(d, l);
  x0.col(0) = params.cls + params.pos.col(0);
  for (int i = 0; i < s; ++i) x0.col(i + 1) = slice_embeddings.col(i) + params.pos.col(i + 1);

  LiteTransformerCache local;
  LiteTransformerCache& cc = cache != nullptr ? *cache : local;
  cc.x0 = x0;

  cc.x_hat1 = column_norm_forward(x0, params.ln1_gamma, params.ln1_beta, params.ln_eps, cc.ln1);
  cc.q = (params.wq * cc.x_hat1).colwise() + params.bq;
  cc.k = (params.wk * cc.x_hat1).colwise() + params.bk;
  cc.v = (params.wv * cc.x_hat1).colwise() + params.bv;

  cc.attn.assign(params.heads, Matrix());
  cc.concat.resize(d, l);
  for (int h = 0; h < params.heads; ++h) {
    const auto qh = cc.q.middleRows(h * dh, dh);
    const auto kh = cc.k.middleRows(h * dh, dh);
    const auto vh = cc.v.middleRows(h * dh, dh);
    Matrix scores = qh.transpose() * kh * scale;  // L x L, row = query position
    Matrix a(l, l);
    for (int r = 0; r < l; ++r) {
      const double m = scores.row(r).maxCoeff();
      Eigen::RowVectorXd e = (scores.row(r).array() - m).exp().matrix();
      a.row(r) = e / e.sum();
    }
    cc.attn[h] = a;
    cc.concat.middleRows(h * dh, dh) = vh * a.transpose();
  }

  cc.x1 = x0 + ((params.wo * cc.concat).colwise() + params.bo);

  cc.x_hat2 =
      column_norm_forward(cc.x1, params.ln2_gamma, params.ln2_beta, params.ln_eps, cc.ln2);
  cc.u = (params.w1 * cc.x_hat2).colwise() + params.b1;
  cc.h.resize(cc.u.rows(), cc.u.cols());
  for (int i = 0; i < cc.u.rows(); ++i) {
    for (int j = 0; j < cc.u.cols(); ++j) cc.h(i, j) = gelu(cc.u(i, j));
  }
  const Matrix x2 = cc.x1 + ((params.w2 * cc.h).colwise() + params.b2);
  return x2.col(0);
}

Embedding aggregate_lite_transformer(const std::vector<Embedding>& embeddings,
                                     const LiteTransformerParams& params) {
  require(!embeddings.empty(), errc::empty_input, "lite transformer needs >= 1 embedding");
  const int d = embeddings.front().dim();
  Matrix m(d, embeddings.size());
  for (std::size_t j = 0; j < embeddings.size(); ++j) {
    require(embeddings[j].dim() == d, errc::shape_mismatch, "mixed embedding dimensions");
    m.col(static_cast<int>(j)) = embeddings[j].values;
  }
  return Embedding{lite_transformer_forward(m, params), false};
}

Matrix lite_transformer_backward(const LiteTransformerCache& cache, const Vector& grad_out,
                                 const LiteTransformerParams& params,
                                 LiteTransformerGrad& grad) {
  const int d = params.dim();
  const int l = static_cast<int>(cache.x0.cols());
  const int s = l - 1;
  const int dh = d / params.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  if (grad.cls.size() == 0) {
    grad.cls = Vector::Zero(d);
    grad.pos = Matrix::Zero(params.pos.rows(), params.pos.cols());
    grad.wq = Matrix::Zero(d, d);
    grad.wk = Matrix::Zero(d, d);
    grad.wv = Matrix::Zero(d, d);
    grad.wo = Matrix::Zero(d, d);
    grad.bq = Vector::Zero(d);
    grad.bk = Vector::Zero(d);
    grad.bv = Vector::Zero(d);
    grad.bo = Vector::Zero(d);
    grad.ln1_gamma = Vector::Zero(d);
    grad.ln1_beta = Vector::Zero(d);
    grad.ln2_gamma = Vector::Zero(d);
    grad.ln2_beta = Vector::Zero(d);
    grad.w1 = Matrix::Zero(params.w1.rows(), params.w1.cols());
    grad.b1 = Vector::Zero(params.b1.size());
    grad.w2 = Matrix::Zero(params.w2.rows(), params.w2.cols());
    grad.b2 = Vector::Zero(params.b2.size());
  }

  // output = x2.col(0)
  Matrix g_x2 = Matrix::Zero(d, l);
  g_x2.col(0) = grad_out;

  // x2 = x1 + W2 GELU(W1 x_hat2 + b1) + b2
  const Matrix& g_f = g_x2;
  grad.w2 += g_f * cache.h.transpose();
  grad.b2 += g_f.rowwise().sum();
  Matrix g_h = params.w2.transpose() * g_f;
  Matrix g_u(g_h.rows(), g_h.cols());
  for (int i = 0; i < g_u.rows(); ++i) {
    for (int j = 0; j < g_u.cols(); ++j) g_u(i, j) = g_h(i, j) * gelu_grad(cache.u(i, j));
  }
  grad.w1 += g_u * cache.x_hat2.transpose();
  grad.b1 += g_u.rowwise().sum();
  const Matrix g_xhat2 = params.w1.transpose() * g_u;
  Matrix g_x1 =
      g_x2 + column_norm_backward(g_xhat2, cache.ln2, params.ln2_gamma, grad.ln2_gamma,
                                  grad.ln2_beta);

  // x1 = x0 + Wo concat + bo
  const Matrix& g_m = g_x1;
  grad.wo += g_m * cache.concat.transpose();
  grad.bo += g_m.rowwise().sum();
  const Matrix g_concat = params.wo.transpose() * g_m;

  Matrix g_q = Matrix::Zero(d, l), g_k = Matrix::Zero(d, l), g_v = Matrix::Zero(d, l);
  for (int h = 0; h < params.heads; ++h) {
    const auto qh = cache.q.middleRows(h * dh, dh);
    const auto kh = cache.k.middleRows(h * dh, dh);
    const auto vh = cache.v.middleRows(h * dh, dh);
    const Matrix& a = cache.attn[h];
    const auto g_oh = g_concat.middleRows(h * dh, dh);

    // O_h = V_h A^T
    g_v.middleRows(h * dh, dh) += g_oh * a;
    Matrix g_a = g_oh.transpose() * vh;  // L x L, same layout as A

    // row softmax backward
    Matrix g_scores(l, l);
    for (int r = 0; r < l; ++r) {
      const double dot = g_a.row(r).dot(a.row(r));
      g_scores.row(r) = (a.row(r).array() * (g_a.row(r).array() - dot)).matrix();
    }
    g_scores *= scale;

    // scores = Q_h^T K_h
    g_q.middleRows(h * dh, dh) += kh * g_scores.transpose();
    g_k.middleRows(h * dh, dh) += qh * g_scores;
  }

  grad.wq += g_q * cache.x_hat1.transpose();
  grad.bq += g_q.rowwise().sum();
  grad.wk += g_k * cache.x_hat1.transpose();
  grad.bk += g_k.rowwise().sum();
  grad.wv += g_v * cache.x_hat1.transpose();
  grad.bv += g_v.rowwise().sum();

  const Matrix g_xhat1 =
      params.wq.transpose() * g_q + params.wk.transpose() * g_k + params.wv.transpose() * g_v;
  Matrix g_x0 =
      g_x1 + column_norm_backward(g_xhat1, cache.ln1, params.ln1_gamma, grad.ln1_gamma,
                                  grad.ln1_beta);

  grad.cls += g_x0.col(0);
  grad.pos.leftCols(l) += g_x0;

  Matrix g_e(d, s);
  for (int i = 0; i < s; ++i) g_e.col(i) = g_x0.col(i + 1);
  return g_e;
}

}  // namespace vlct::embed
