#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "common/jsonl.hpp"
#include "encode/encoding.hpp"
#include "encode/montage.hpp"
#include "rag/index.hpp"
#include "train/model.hpp"
#include "train/trainer.hpp"

namespace vlct::pipeline {

struct SynthSpec {
  int n_studies = 100;
  std::array<double, 3> class_distribution{0.312, 0.224, 0.464};
  std::array<int, 3> dims{40, 48, 48};
  double signal = 1.0;
  double noise_hu = 12.0;
  int anisotropic_every = 4;     // every Nth study written at 1.25 mm z spacing (0 = never)
  int decoy_series_every = 5;    // every Nth study gains an extra sub-30-slice series (0 = never)
  int patients_repeat_every = 0; // every Nth study reuses the previous patient id (0 = never)
  std::uint64_t seed = 0;
  void validate() const;
};

struct TeacherSpec {
  std::string name;
  std::string kind;       // rule | rule_noisy | http
  double flip_prob = 0.0; // rule_noisy only
};

/// The effective run configuration: user file deep-merged over defaults, with
/// a content hash that keys every stage artifact.
class RunConfig {
 public:
  static json default_json();
  static RunConfig from_json(const json& user);
  static RunConfig load(const std::filesystem::path& path);

  /// --seed / --out overrides; these participate in the hash.
  void override_seed(std::uint64_t seed);
  void override_out_dir(const std::string& out_dir);

  const json& effective() const { return effective_; }
  const std::string& hash() const { return hash_; }
  std::uint64_t seed() const;
  std::filesystem::path out_dir() const;

  encode::EncodingConfig encoding() const;
  encode::MontageConfig montage() const;
  bool montage_emit() const;
  train::ModelConfig model() const;
  train::TrainConfig train() const;  // seed filled from the run seed
  std::array<double, 3> split_fractions() const;
  std::vector<TeacherSpec> teachers() const;
  std::vector<int> eval_ks() const;
  rag::MmrConfig mmr() const;
  int rag_k() const;
  std::string rag_generator() const;  // echo | http
  bool rag_attach_montage() const;
  double ingest_target_spacing() const;
  SynthSpec synth() const;
  std::filesystem::path manifest_path() const;  // defaults to <out>/synth/manifest.jsonl
  std::filesystem::path reports_path() const;
  std::filesystem::path lexicon_path() const;  // empty = builtin

 private:
  void rehash();
  json effective_;
  std::string hash_;
};

}  // namespace vlct::pipeline
