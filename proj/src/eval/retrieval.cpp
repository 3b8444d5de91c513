#include "eval/retrieval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "common/error.hpp"

namespace vlct::eval {

RetrievalMetrics retrieval_eval(const Matrix& similarity, const std::vector<int>& query_classes,
                                const std::vector<int>& gallery_classes,
                                const std::vector<int>& ks) {
  const int nq = static_cast<int>(similarity.rows());
  const int ng = static_cast<int>(similarity.cols());
  require(nq >= 1 && ng >= 1, errc::empty_input, "similarity matrix is empty");
  require(static_cast<int>(query_classes.size()) == nq &&
              static_cast<int>(gallery_classes.size()) == ng,
          errc::length_mismatch, "class vectors do not match matrix shape");
  require(!ks.empty(), errc::empty_input, "no K values requested");

  RetrievalMetrics out;
  for (int k : ks) out.recall_at[k] = 0.0;
  double mrr_total = 0.0;

  std::vector<int> order(ng);
  for (int q = 0; q < nq; ++q) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return similarity(q, a) > similarity(q, b);  // stable keeps ascending index on ties
    });
    int first_rank = 0;
    for (int r = 0; r < ng; ++r) {
      if (gallery_classes[order[r]] == query_classes[q]) {
        first_rank = r + 1;
        break;
      }
    }
    require(first_rank > 0, errc::no_positive_in_gallery,
            "query " + std::to_string(q) + " has no equivalent gallery item");
    mrr_total += 1.0 / first_rank;
    for (int k : ks) {
      if (first_rank <= k) out.recall_at[k] += 1.0;
    }
  }

  for (auto& [k, v] : out.recall_at) {
    (void)k;
    v /= nq;
  }
  out.mrr = mrr_total / nq;
  return out;
}

RetrievalMetrics retrieval_eval(const Matrix& similarity, const std::vector<int>& classes,
                                const std::vector<int>& ks) {
  return retrieval_eval(similarity, classes, classes, ks);
}

std::vector<int> duplicate_classes(const std::vector<std::string>& normalized_impressions) {
  std::map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(normalized_impressions.size());
  for (const std::string& s : normalized_impressions) {
    auto [it, inserted] = ids.emplace(s, static_cast<int>(ids.size()));
    (void)inserted;
    out.push_back(it->second);
  }
  return out;
}

}  // namespace vlct::eval
