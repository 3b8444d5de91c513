#include "eval/ordinal.hpp"

#include <cmath>
#include <cstdlib>

#include "common/error.hpp"
#include "reports/rule_engine.hpp"

namespace vlct::eval {

namespace {
void check_labels(const std::vector<int>& predicted, const std::vector<int>& truth) {
  require(predicted.size() == truth.size(), errc::length_mismatch,
          "prediction/truth length mismatch");
  require(!predicted.empty(), errc::empty_input, "no labels to score");
  for (int y : predicted) require(y >= 0 && y <= 2, errc::invalid_config, "label outside {0,1,2}");
  for (int y : truth) require(y >= 0 && y <= 2, errc::invalid_config, "label outside {0,1,2}");
}
}  // namespace

ClassificationMetrics classify_metrics(const std::vector<int>& predicted,
                                       const std::vector<int>& truth) {
  check_labels(predicted, truth);
  ClassificationMetrics m;
  const int n = static_cast<int>(truth.size());
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    m.confusion[truth[i]][predicted[i]] += 1;
    correct += predicted[i] == truth[i];
  }
  m.accuracy = static_cast<double>(correct) / n;

  double f1_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    int tp = m.confusion[c][c], fp = 0, fn = 0;
    for (int o = 0; o < 3; ++o) {
      if (o == c) continue;
      fp += m.confusion[o][c];
      fn += m.confusion[c][o];
    }
    m.precision[c] = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall[c] = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1[c] = m.precision[c] + m.recall[c] > 0.0
                  ? 2.0 * m.precision[c] * m.recall[c] / (m.precision[c] + m.recall[c])
                  : 0.0;
    f1_sum += m.f1[c];
  }
  m.macro_f1 = f1_sum / 3.0;
  return m;
}

OrdinalReport ordinal_eval(const std::vector<int>& predicted, const std::vector<int>& truth,
                           const std::array<double, 3>& class_distribution) {
  check_labels(predicted, truth);
  double dist_sum = 0.0;
  for (double p : class_distribution) {
    require(p >= 0.0, errc::invalid_config, "class probabilities must be nonnegative");
    dist_sum += p;
  }
  require(std::abs(dist_sum - 1.0) <= 1e-6, errc::invalid_config,
          "class distribution must sum to 1");

  OrdinalReport r;
  const int n = static_cast<int>(truth.size());
  int exact = 0, within = 0;
  double abs_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int d = std::abs(predicted[i] - truth[i]);
    exact += d == 0;
    within += d <= 1;
    abs_sum += d;
  }
  r.exact_accuracy = static_cast<double>(exact) / n;
  r.within_one = static_cast<double>(within) / n;
  r.mae = abs_sum / n;
  const double p0 = class_distribution[0], p2 = class_distribution[2];
  r.chance_within_one_prevalence = 1.0 - 2.0 * p0 * p2;
  r.chance_within_one_uniform = 1.0 - (p0 + p2) / 3.0;
  return r;
}

LabelConsistencyReport label_consistency(const std::vector<std::string>& generated_impressions,
                                         const std::vector<int>& truth,
                                         const std::array<double, 3>& class_distribution,
                                         const reports::RuleLexicon& lexicon) {
  require(generated_impressions.size() == truth.size(), errc::length_mismatch,
          "generated/truth length mismatch");
  LabelConsistencyReport report;
  report.predicted.reserve(generated_impressions.size());
  for (std::size_t i = 0; i < generated_impressions.size(); ++i) {
    const reports::ReportDoc doc =
        reports::ReportDoc::make("generated-" + std::to_string(i), "", generated_impressions[i]);
    report.predicted.push_back(static_cast<int>(reports::rule_classify(doc, lexicon).label));
  }
  report.ordinal = ordinal_eval(report.predicted, truth, class_distribution);
  report.classification = classify_metrics(report.predicted, truth);
  return report;
}

}  // namespace vlct::eval
