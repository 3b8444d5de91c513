#pragma once

#include <map>
#include <vector>

#include "embed/embedding.hpp"

namespace vlct::eval {

using embed::Matrix;

struct RetrievalMetrics {
  std::map<int, double> recall_at;
  double mrr = 0.0;
};

/// Duplicate-aware ranking metrics. Gallery items are ranked per query by
/// descending similarity with ties broken by ascending gallery index; a query
/// succeeds at K when any gallery item sharing its equivalence class appears
/// in the top K, and MRR uses the rank of the first such item. Throws
/// NoPositiveInGallery when a query has no equivalent gallery item.
RetrievalMetrics retrieval_eval(const Matrix& similarity, const std::vector<int>& query_classes,
                                const std::vector<int>& gallery_classes,
                                const std::vector<int>& ks);

/// Symmetric case: queries and gallery are the same samples/classes.
RetrievalMetrics retrieval_eval(const Matrix& similarity, const std::vector<int>& classes,
                                const std::vector<int>& ks);

/// Duplicate-class ids from normalized impressions (equal text, equal class).
std::vector<int> duplicate_classes(const std::vector<std::string>& normalized_impressions);

}  // namespace vlct::eval
