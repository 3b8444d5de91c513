#pragma once

#include <string>
#include <vector>

#include "embed/embedding.hpp"

namespace vlct::train {

using embed::Matrix;
using embed::Vector;

/// For each batch index i, the indices sharing i's normalized impression
/// (always including i). An equivalence partition restricted to the batch.
struct PositiveSets {
  std::vector<std::vector<int>> sets;

  int size() const { return static_cast<int>(sets.size()); }
  void validate() const;

  static PositiveSets singletons(int n);
  static PositiveSets all_mutual(int n);
};

/// Exact string equality on normalized impressions.
PositiveSets build_positive_sets(const std::vector<std::string>& normalized_impressions);

/// Symmetric multi-positive contrastive loss:
///   L = -(1/2N) sum_i [ log( sum_{j in P_i} e^{s_ij/tau} / sum_k e^{s_ik/tau} )
///                     + log( sum_{j in P_i} e^{s_ji/tau} / sum_k e^{s_ki/tau} ) ]
/// computed with max-shifted log-sum-exp. The second term applies row i's
/// positive set down column i.
double multipositive_loss(const Matrix& similarity, const PositiveSets& positives, double tau);

/// Loss plus dL/ds and dL/d(log tau).
double multipositive_loss_grad(const Matrix& similarity, const PositiveSets& positives,
                               double tau, Matrix* grad_similarity, double* grad_log_tau);

}  // namespace vlct::train
