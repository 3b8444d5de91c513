#pragma once

#include <string>
#include <vector>

#include "embed/embedding.hpp"

namespace vlct::rag {

using embed::Matrix;
using embed::Vector;

struct IndexEntry {
  std::string study_id;
  std::string impression;
};

/// Cosine index over unit-normalized training volume embeddings, aligned with
/// study ids and impressions.
class EmbeddingIndex {
 public:
  /// rows: n x d with unit rows (validated to 1e-6).
  static EmbeddingIndex build(Matrix rows, std::vector<IndexEntry> entries);

  int size() const { return static_cast<int>(entries_.size()); }
  int dim() const { return static_cast<int>(rows_.cols()); }
  const IndexEntry& entry(int i) const { return entries_[i]; }

  struct Hit {
    int row;
    std::string study_id;
    std::string impression;
    double similarity;
  };

  /// Top-k by descending cosine similarity, ties broken by ascending row
  /// index. Requires a normalized query and k <= size.
  std::vector<Hit> topk(const Vector& query, int k) const;

 private:
  Matrix rows_;
  std::vector<IndexEntry> entries_;
};

struct MmrConfig {
  int pool_size = 50;
  int k = 5;
  double lambda = 0.7;
  bool enabled = true;
  void validate() const;
};

/// An MMR candidate: query similarity from the volume index plus the unit
/// text embedding of its impression (candidate-to-candidate similarity acts
/// on the retrieved text, not the volumes).
struct MmrCandidate {
  EmbeddingIndex::Hit hit;
  Vector text_embedding;
};

/// Greedy maximal-marginal-relevance selection of k candidates maximizing
///   lambda * sim(query, c) - (1 - lambda) * max_{s in selected} sim(c, s);
/// the first pick is the highest query similarity; ties break toward the
/// earlier pool position.
std::vector<MmrCandidate> mmr_select(const std::vector<MmrCandidate>& pool,
                                     const MmrConfig& config);

}  // namespace vlct::rag
