#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "embed/embedding.hpp"
#include "embed/lora.hpp"
#include "encode/encoding.hpp"

namespace vlct::embed {

struct SliceRef {
  std::string study_id;
  encode::Plane plane = encode::Plane::kAxial;
  int index = 0;
};

/// Frozen vision tower stand-in: produces the features that feed the
/// provider's final (adaptable) linear layer.
class SliceFeatureProvider {
 public:
  virtual ~SliceFeatureProvider() = default;
  virtual int dim() const = 0;
  virtual Vector frozen_features(const SliceRef& ref, const encode::RgbSlice& slice) const = 0;
};

/// Deterministic toy encoder: area-downsample to 16x16x3, flatten, apply a
/// fixed seeded Gaussian projection to d.
class ToySliceProvider : public SliceFeatureProvider {
 public:
  ToySliceProvider(int dim, std::uint64_t seed);
  int dim() const override { return dim_; }
  Vector frozen_features(const SliceRef& ref, const encode::RgbSlice& slice) const override;

 private:
  int dim_;
  Matrix projection_;  // d x 768
};

/// Lookup keyed by (study_id, plane, index); throws MissingEmbedding.
class FileBackedSliceProvider : public SliceFeatureProvider {
 public:
  FileBackedSliceProvider(const std::filesystem::path& store_path, int dim);
  int dim() const override { return dim_; }
  Vector frozen_features(const SliceRef& ref, const encode::RgbSlice& slice) const override;

 private:
  int dim_;
  std::map<std::string, Vector> store_;
};

std::string slice_store_key(const std::string& study_id, encode::Plane plane, int index);

class TextFeatureProvider {
 public:
  virtual ~TextFeatureProvider() = default;
  virtual int dim() const = 0;
  virtual Vector frozen_features(const std::string& normalized_impression) const = 0;
};

/// Hashed bag-of-words counts through a fixed seeded Gaussian projection.
class ToyTextProvider : public TextFeatureProvider {
 public:
  ToyTextProvider(int dim, std::uint64_t seed, int buckets = 1024);
  int dim() const override { return dim_; }
  Vector frozen_features(const std::string& normalized_impression) const override;

 private:
  int dim_;
  int buckets_;
  Matrix projection_;  // d x buckets
};

/// Lookup keyed by the hex FNV-1a hash of the normalized impression.
class FileBackedTextProvider : public TextFeatureProvider {
 public:
  FileBackedTextProvider(const std::filesystem::path& store_path, int dim);
  int dim() const override { return dim_; }
  Vector frozen_features(const std::string& normalized_impression) const override;

 private:
  int dim_;
  std::map<std::string, Vector> store_;
};

std::string text_store_key(const std::string& normalized_impression);

/// Provider plus the adaptable final linear layer (identity base, optional
/// low-rank delta). The adapter pointer is borrowed, not owned.
struct VisionTower {
  std::shared_ptr<SliceFeatureProvider> provider;
  const LoraAdapter* adapter = nullptr;

  Vector features(const SliceRef& ref, const encode::RgbSlice& slice) const;
  std::vector<Embedding> embed_slices(const std::vector<SliceRef>& refs,
                                      const std::vector<encode::RgbSlice>& slices) const;
};

struct TextTower {
  std::shared_ptr<TextFeatureProvider> provider;
  const LoraAdapter* adapter = nullptr;

  Embedding embed_text(const std::string& normalized_impression) const;
};

/// Slice feature store io: line-delimited {study_id, plane, index, values}.
void write_slice_store(const std::filesystem::path& path,
                       const std::vector<std::pair<SliceRef, Vector>>& records);

/// Text feature store io: line-delimited {key, values}.
void write_text_store(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, Vector>>& records);

}  // namespace vlct::embed
