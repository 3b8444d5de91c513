#pragma once

#include <array>
#include <string>
#include <vector>

#include "reports/lexicon.hpp"

namespace vlct::eval {

struct ClassificationMetrics {
  double accuracy = 0.0;
  std::array<double, 3> precision{0, 0, 0};
  std::array<double, 3> recall{0, 0, 0};
  std::array<double, 3> f1{0, 0, 0};
  double macro_f1 = 0.0;
  std::array<std::array<int, 3>, 3> confusion{};  // confusion[true][pred]
};

ClassificationMetrics classify_metrics(const std::vector<int>& predicted,
                                       const std::vector<int>& truth);

struct OrdinalReport {
  double exact_accuracy = 0.0;
  double mae = 0.0;       // on the 0/1/2 ordinal scale
  double within_one = 0.0;
  double chance_within_one_prevalence = 0.0;  // 1 - 2*p0*p2
  double chance_within_one_uniform = 0.0;     // 1 - (p0+p2)/3
};

/// Ordinal agreement on labels in {0,1,2} plus the two chance baselines for
/// the given true-class distribution.
OrdinalReport ordinal_eval(const std::vector<int>& predicted, const std::vector<int>& truth,
                           const std::array<double, 3>& class_distribution);

struct LabelConsistencyReport {
  OrdinalReport ordinal;
  ClassificationMetrics classification;
  std::vector<int> predicted;  // rule labels of the generated texts
};

/// Applies the rule classifier to each generated impression (as an
/// impression-only report) and scores the labels against the truth.
LabelConsistencyReport label_consistency(const std::vector<std::string>& generated_impressions,
                                         const std::vector<int>& truth,
                                         const std::array<double, 3>& class_distribution,
                                         const reports::RuleLexicon& lexicon);

}  // namespace vlct::eval
