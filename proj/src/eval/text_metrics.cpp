#include "eval/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "common/strutil.hpp"

namespace vlct::eval {

namespace {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                     std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] += 1;
  }
  return counts;
}

}  // namespace

double rouge_l_f1(const std::string& candidate, const std::string& reference) {
  const auto cand = metric_tokenize(candidate);
  const auto ref = metric_tokenize(reference);
  const std::size_t l = lcs_length(cand, ref);
  if (l == 0) return 0.0;
  // algebraically 2PR/(P+R) with P = L/|cand|, R = L/|ref|
  return 2.0 * static_cast<double>(l) / static_cast<double>(cand.size() + ref.size());
}

double bleu_sentence(const std::string& candidate, const std::string& reference) {
  const auto cand = metric_tokenize(candidate);
  const auto ref = metric_tokenize(reference);
  if (cand.empty()) return 0.0;

  double log_sum = 0.0;
  int zero_orders = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand_counts = ngram_counts(cand, n);
    const auto ref_counts = ngram_counts(ref, n);
    long total = 0, matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (total == 0 || matched == 0) {
      ++zero_orders;
      p = 1.0 / std::pow(2.0, zero_orders);
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
    }
    log_sum += std::log(p);
  }

  const double geo_mean = std::exp(log_sum / 4.0);
  const double bp =
      cand.size() >= ref.size()
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  return 100.0 * bp * geo_mean;
}

}  // namespace vlct::eval
