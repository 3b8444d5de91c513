#include "eval/probe.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "common/error.hpp"

namespace vlct::eval {

namespace {

constexpr int kClasses = 3;
constexpr double kGradTol = 1e-6;
constexpr int kMaxIter = 500;

/// Row-wise softmax of logits (N x 3), max-shifted.
Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - m).exp().matrix();
    p.row(i) = e / e.sum();
  }
  return p;
}

double objective(const Matrix& x, const std::vector<int>& labels, const Vector& sample_weights,
                 const Matrix& weights, const Vector& bias, double c, Matrix* probs_out) {
  const int n = static_cast<int>(x.rows());
  Matrix logits = x * weights.transpose();
  logits.rowwise() += bias.transpose();
  const Matrix p = softmax_rows(logits);
  double f = 0.0;
  for (int i = 0; i < n; ++i) {
    f -= sample_weights[i] * std::log(std::max(p(i, labels[i]), 1e-300));
  }
  f += weights.squaredNorm() / (2.0 * c);
  if (probs_out != nullptr) *probs_out = p;
  return f;
}

}  // namespace

std::array<double, 3> balanced_class_weights(const std::vector<int>& labels) {
  require(!labels.empty(), errc::empty_input, "no labels");
  std::array<double, 3> counts{0, 0, 0};
  for (int y : labels) {
    require(y >= 0 && y < kClasses, errc::invalid_config, "label outside {0,1,2}");
    counts[y] += 1.0;
  }
  std::array<double, 3> w;
  const double n = static_cast<double>(labels.size());
  for (int c = 0; c < kClasses; ++c) {
    require(counts[c] > 0, errc::degenerate_labels,
            "class " + std::to_string(c) + " has no samples");
    w[c] = n / (kClasses * counts[c]);
  }
  return w;
}

ProbeModel probe_fit(const Matrix& features, const std::vector<int>& labels, double c) {
  const int n = static_cast<int>(features.rows());
  const int d = static_cast<int>(features.cols());
  require(n >= 1 && d >= 1, errc::shape_mismatch, "features must be a nonempty N x d matrix");
  require(static_cast<int>(labels.size()) == n, errc::length_mismatch,
          "labels do not match feature rows");
  require(c > 0, errc::invalid_config, "regularization C must be positive");

  ProbeModel model;
  model.c = c;
  model.class_weights = balanced_class_weights(labels);
  model.weights = Matrix::Zero(kClasses, d);
  model.bias = Vector::Zero(kClasses);

  Vector sw(n);
  for (int i = 0; i < n; ++i) sw[i] = model.class_weights[labels[i]];

  // design matrix with appended intercept column
  Matrix xt(n, d + 1);
  xt.leftCols(d) = features;
  xt.col(d).setOnes();

  const int dim = kClasses * (d + 1);
  Matrix probs;
  double f = objective(features, labels, sw, model.weights, model.bias, c, &probs);
  model.objective_trace.push_back(f);

  for (int iter = 0; iter < kMaxIter; ++iter) {
    // gradient
    Matrix residual = probs;  // N x 3
    for (int i = 0; i < n; ++i) residual(i, labels[i]) -= 1.0;
    residual.array().colwise() *= sw.array();
    Matrix grad_wb = residual.transpose() * xt;  // 3 x (d+1)
    grad_wb.leftCols(d) += model.weights / c;

    double grad_norm = grad_wb.norm();
    if (grad_norm <= kGradTol) break;

    // Hessian as 3x3 blocks of (d+1)x(d+1)
    Matrix hess = Matrix::Zero(dim, dim);
    for (int a = 0; a < kClasses; ++a) {
      for (int b = a; b < kClasses; ++b) {
        Vector coef(n);
        for (int i = 0; i < n; ++i) {
          const double pa = probs(i, a);
          coef[i] = sw[i] * (a == b ? pa * (1.0 - pa) : -pa * probs(i, b));
        }
        const Matrix block = xt.transpose() * coef.asDiagonal() * xt;
        hess.block(a * (d + 1), b * (d + 1), d + 1, d + 1) = block;
        if (a != b) hess.block(b * (d + 1), a * (d + 1), d + 1, d + 1) = block;
      }
    }
    for (int a = 0; a < kClasses; ++a) {
      for (int j = 0; j < d; ++j) hess(a * (d + 1) + j, a * (d + 1) + j) += 1.0 / c;
    }
    hess.diagonal().array() += 1e-10;  // gauge freedom in the biases

    Vector grad_flat(dim);
    for (int a = 0; a < kClasses; ++a) {
      grad_flat.segment(a * (d + 1), d) = grad_wb.row(a).head(d).transpose();
      grad_flat[a * (d + 1) + d] = grad_wb(a, d);
    }
    const Vector step = hess.ldlt().solve(grad_flat);

    // backtracking line search on the full Newton step
    double t = 1.0;
    Matrix new_w = model.weights;
    Vector new_b = model.bias;
    double new_f = f;
    Matrix new_p;
    for (int ls = 0; ls < 60; ++ls) {
      for (int a = 0; a < kClasses; ++a) {
        new_w.row(a) = model.weights.row(a) - t * step.segment(a * (d + 1), d).transpose();
        new_b[a] = model.bias[a] - t * step[a * (d + 1) + d];
      }
      new_f = objective(features, labels, sw, new_w, new_b, c, &new_p);
      if (new_f <= f) break;
      t *= 0.5;
    }
    require(new_f <= f, errc::internal, "probe line search failed to decrease the objective");

    model.weights = new_w;
    model.bias = new_b;
    probs = new_p;
    f = new_f;
    model.objective_trace.push_back(f);
  }

  return model;
}

std::vector<int> probe_predict(const ProbeModel& model, const Matrix& features) {
  require(features.cols() == model.weights.cols(), errc::shape_mismatch,
          "feature dimension does not match the probe");
  std::vector<int> out(features.rows());
  for (int i = 0; i < features.rows(); ++i) {
    const Vector logits = model.weights * features.row(i).transpose() + model.bias;
    int best = 0;
    for (int a = 1; a < kClasses; ++a) {
      if (logits[a] > logits[best]) best = a;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace vlct::eval
