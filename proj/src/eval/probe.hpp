#pragma once

#include <array>
#include <vector>

#include "embed/embedding.hpp"

namespace vlct::eval {

using embed::Matrix;
using embed::Vector;

/// Multinomial logistic probe over the three activity classes with L2
/// penalty (1/(2C))*||W||^2 on the weights (not the biases) and balanced
/// class weights N/(3*n_c).
struct ProbeModel {
  Matrix weights;  // 3 x d
  Vector bias;     // 3
  double c = 1.0;
  std::array<double, 3> class_weights{1.0, 1.0, 1.0};
  std::vector<double> objective_trace;  // per-iteration objective values
};

std::array<double, 3> balanced_class_weights(const std::vector<int>& labels);

/// Damped-Newton fit from zero initialization with a backtracking line search,
/// run to gradient norm <= 1e-6. Deterministic. Throws DegenerateLabels when a
/// class has no samples.
ProbeModel probe_fit(const Matrix& features, const std::vector<int>& labels, double c = 1.0);

std::vector<int> probe_predict(const ProbeModel& model, const Matrix& features);

}  // namespace vlct::eval
