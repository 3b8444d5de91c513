#include "rag/index.hpp"

#include <algorithm>
#include <numeric>

#include "common/error.hpp"

namespace vlct::rag {

EmbeddingIndex EmbeddingIndex::build(Matrix rows, std::vector<IndexEntry> entries) {
  require(rows.rows() == static_cast<long>(entries.size()), errc::shape_mismatch,
          "index rows and entries must align");
  for (long i = 0; i < rows.rows(); ++i) {
    require(std::abs(rows.row(i).norm() - 1.0) <= embed::kUnitNormTolerance,
            errc::shape_mismatch, "index row " + std::to_string(i) + " is not unit-normalized");
  }
  EmbeddingIndex idx;
  idx.rows_ = std::move(rows);
  idx.entries_ = std::move(entries);
  return idx;
}

std::vector<EmbeddingIndex::Hit> EmbeddingIndex::topk(const Vector& query, int k) const {
  require(size() > 0, errc::empty_index, "index is empty");
  require(k >= 1 && k <= size(), errc::invalid_config, "k must be in [1, index size]");
  require(query.size() == rows_.cols(), errc::shape_mismatch, "query dimension mismatch");

  const Vector sims = rows_ * query;
  std::vector<int> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sims[a] > sims[b]; });

  std::vector<Hit> hits;
  hits.reserve(k);
  for (int i = 0; i < k; ++i) {
    const int row = order[i];
    hits.push_back({row, entries_[row].study_id, entries_[row].impression, sims[row]});
  }
  return hits;
}

void MmrConfig::validate() const {
  require(k >= 1 && k <= pool_size, errc::invalid_config, "MMR requires 1 <= k <= pool_size");
  require(lambda >= 0.0 && lambda <= 1.0, errc::invalid_config, "MMR lambda must be in [0,1]");
}

std::vector<MmrCandidate> mmr_select(const std::vector<MmrCandidate>& pool,
                                     const MmrConfig& config) {
  config.validate();
  require(!pool.empty(), errc::empty_pool, "MMR pool is empty");
  const int n = static_cast<int>(pool.size());
  const int k = std::min(config.k, n);

  std::vector<bool> taken(n, false);
  std::vector<MmrCandidate> selected;
  selected.reserve(k);
  // max text similarity of each candidate to the already selected set
  std::vector<double> max_sim(n, 0.0);
  std::vector<bool> has_sim(n, false);

  for (int pick = 0; pick < k; ++pick) {
    int best = -1;
    double best_score = 0.0;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double diversity = has_sim[i] ? max_sim[i] : 0.0;
      const double score = pick == 0
                               ? pool[i].hit.similarity
                               : config.lambda * pool[i].hit.similarity -
                                     (1.0 - config.lambda) * diversity;
      if (best < 0 || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    selected.push_back(pool[best]);
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double s = pool[i].text_embedding.dot(pool[best].text_embedding);
      if (!has_sim[i] || s > max_sim[i]) {
        max_sim[i] = s;
        has_sim[i] = true;
      }
    }
  }
  return selected;
}

}  // namespace vlct::rag
