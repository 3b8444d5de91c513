#include "embed/providers.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/rng.hpp"
#include "common/strutil.hpp"

namespace vlct::embed {

namespace {

constexpr int kThumb = 16;  // toy encoder input resolution per channel

Matrix seeded_projection(int rows, int cols, std::uint64_t seed, const char* tag) {
  Rng rng(derive_seed(seed, tag));
  const double sigma = 1.0 / std::sqrt(static_cast<double>(cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, sigma);
  }
  return m;
}

Vector json_to_vector(const json& arr) {
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
  return v;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

std::string slice_store_key(const std::string& study_id, encode::Plane plane, int index) {
  return study_id + "|" + encode::plane_name(plane) + "|" + std::to_string(index);
}

std::string text_store_key(const std::string& normalized_impression) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(normalized_impression)));
  return buf;
}

ToySliceProvider::ToySliceProvider(int dim, std::uint64_t seed)
    : dim_(dim), projection_(seeded_projection(dim, kThumb * kThumb * 3, seed, "toy_vision")) {}

Vector ToySliceProvider::frozen_features(const SliceRef& ref,
                                         const encode::RgbSlice& slice) const {
  (void)ref;
  require(slice.height >= 1 && slice.width >= 1, errc::empty_input, "empty slice");

  // area-average downsample into a 16x16 grid per channel
  Vector flat(kThumb * kThumb * 3);
  for (int gr = 0; gr < kThumb; ++gr) {
    const int r0 = gr * slice.height / kThumb;
    const int r1 = std::max(r0 + 1, (gr + 1) * slice.height / kThumb);
    for (int gc = 0; gc < kThumb; ++gc) {
      const int c0 = gc * slice.width / kThumb;
      const int c1 = std::max(c0 + 1, (gc + 1) * slice.width / kThumb);
      double sum[3] = {0.0, 0.0, 0.0};
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          for (int ch = 0; ch < 3; ++ch) sum[ch] += slice.at(r, c, ch);
        }
      }
      const double area = static_cast<double>(r1 - r0) * (c1 - c0);
      for (int ch = 0; ch < 3; ++ch) {
        flat[(gr * kThumb + gc) * 3 + ch] = sum[ch] / area;
      }
    }
  }
  return projection_ * flat;
}

FileBackedSliceProvider::FileBackedSliceProvider(const std::filesystem::path& store_path, int dim)
    : dim_(dim) {
  for (const json& r : read_jsonl(store_path)) {
    const std::string key = slice_store_key(r.at("study_id").get<std::string>(),
                                            encode::plane_from_name(r.at("plane")),
                                            r.at("index").get<int>());
    Vector v = json_to_vector(r.at("values"));
    require(v.size() == dim_, errc::shape_mismatch, "stored embedding has wrong dimension");
    store_[key] = std::move(v);
  }
}

Vector FileBackedSliceProvider::frozen_features(const SliceRef& ref,
                                                const encode::RgbSlice& slice) const {
  (void)slice;
  const auto it = store_.find(slice_store_key(ref.study_id, ref.plane, ref.index));
  require(it != store_.end(), errc::missing_embedding,
          "no stored embedding for " + slice_store_key(ref.study_id, ref.plane, ref.index));
  return it->second;
}

ToyTextProvider::ToyTextProvider(int dim, std::uint64_t seed, int buckets)
    : dim_(dim), buckets_(buckets),
      projection_(seeded_projection(dim, buckets, seed, "toy_text")) {}

Vector ToyTextProvider::frozen_features(const std::string& normalized_impression) const {
  Vector counts = Vector::Zero(buckets_);
  for (const std::string& tok : split_whitespace(normalized_impression)) {
    counts[static_cast<int>(fnv1a64(tok) % static_cast<std::uint64_t>(buckets_))] += 1.0;
  }
  return projection_ * counts;
}

FileBackedTextProvider::FileBackedTextProvider(const std::filesystem::path& store_path, int dim)
    : dim_(dim) {
  for (const json& r : read_jsonl(store_path)) {
    Vector v = json_to_vector(r.at("values"));
    require(v.size() == dim_, errc::shape_mismatch, "stored embedding has wrong dimension");
    store_[r.at("key").get<std::string>()] = std::move(v);
  }
}

Vector FileBackedTextProvider::frozen_features(const std::string& normalized_impression) const {
  const auto it = store_.find(text_store_key(normalized_impression));
  require(it != store_.end(), errc::missing_embedding,
          "no stored text embedding for key " + text_store_key(normalized_impression));
  return it->second;
}

Vector VisionTower::features(const SliceRef& ref, const encode::RgbSlice& slice) const {
  require(provider != nullptr, errc::invalid_config, "vision provider not configured");
  Vector z = provider->frozen_features(ref, slice);
  return adapter != nullptr ? lora_identity_apply(*adapter, z) : z;
}

std::vector<Embedding> VisionTower::embed_slices(const std::vector<SliceRef>& refs,
                                                 const std::vector<encode::RgbSlice>& slices) const {
  require(!slices.empty(), errc::empty_input, "no slices to embed");
  require(refs.size() == slices.size(), errc::shape_mismatch, "refs/slices length mismatch");
  std::vector<Embedding> out;
  out.reserve(slices.size());
  for (std::size_t i = 0; i < slices.size(); ++i) {
    out.push_back(Embedding{features(refs[i], slices[i]), false});
  }
  return out;
}

Embedding TextTower::embed_text(const std::string& normalized_impression) const {
  require(provider != nullptr, errc::invalid_config, "text provider not configured");
  Vector z = provider->frozen_features(normalized_impression);
  if (adapter != nullptr) z = lora_identity_apply(*adapter, z);
  return Embedding{std::move(z), false};
}

void write_slice_store(const std::filesystem::path& path,
                       const std::vector<std::pair<SliceRef, Vector>>& records) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& [ref, values] : records) {
    lines.push_back({{"study_id", ref.study_id},
                     {"plane", encode::plane_name(ref.plane)},
                     {"index", ref.index},
                     {"values", vector_to_json(values)}});
  }
  write_jsonl(path, lines);
}

void write_text_store(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, Vector>>& records) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& [key, values] : records) {
    lines.push_back({{"key", key}, {"values", vector_to_json(values)}});
  }
  write_jsonl(path, lines);
}

}  // namespace vlct::embed
