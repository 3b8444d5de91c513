#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embed/attention_pool.hpp"
#include "embed/lite_transformer.hpp"
#include "embed/lora.hpp"
#include "embed/projector.hpp"
#include "train/loss.hpp"

namespace vlct::train {

using embed::Matrix;
using embed::Vector;

enum class AggregatorKind { kMean, kAttention, kLiteTransformer };

const char* aggregator_name(AggregatorKind k);
AggregatorKind aggregator_from_name(const std::string& name);

struct LoraSpec {
  int rank = 4;
  bool vision = true;
  bool text = true;
};

struct ModelConfig {
  int dim = embed::kDefaultDim;
  AggregatorKind aggregator = AggregatorKind::kMean;
  LoraSpec lora;
  bool projector_on_text = false;  // vision-side projector only by default
  double dropout = 0.1;
  int heads = 4;
  int max_slices = 64;
  double init_sigma = 0.02;
  double tau_init = 0.07;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Every trainable parameter of the pipeline: adapters on the two towers'
/// final linear layers, the aggregator, the residual projector(s), and the
/// temperature stored as log tau.
struct ModelParams {
  ModelConfig config;
  std::optional<embed::LoraAdapter> vision_lora, text_lora;
  std::optional<embed::AttentionPoolParams> attention;
  std::optional<embed::LiteTransformerParams> lite;
  embed::ProjectorParams projector;
  std::optional<embed::ProjectorParams> text_projector;
  double log_tau = 0.0;

  double tau() const;
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
};

struct ModelGrads {
  std::optional<embed::LoraGrad> vision_lora, text_lora;
  std::optional<embed::AttentionPoolGrad> attention;
  std::optional<embed::LiteTransformerGrad> lite;
  embed::ProjectorGrad projector;
  std::optional<embed::ProjectorGrad> text_projector;
  double log_tau = 0.0;
};

ModelGrads make_zero_grads(const ModelParams& params);

/// A contiguous view of one parameter (or gradient) tensor.
struct ParamBlock {
  double* data;
  long size;
  bool decay;  // participates in decoupled weight decay
};

/// Fixed-order enumeration; params and their grads enumerate identically.
std::vector<ParamBlock> param_blocks(ModelParams& params);
std::vector<ParamBlock> grad_blocks(ModelGrads& grads, const ModelParams& shape);

long param_count(const ModelParams& params);
Vector flatten(const ModelParams& params);
void unflatten(ModelParams& params, const Vector& flat);

/// Frozen-tower outputs for one study, the inputs to every trainable stage.
struct StudyFeatures {
  std::string study_id;
  Matrix slice_features;  // d x S
  Vector text_features;   // d
  std::string normalized_impression;
  int label = -1;
};

struct StudyForwardCache {
  const StudyFeatures* features = nullptr;  // frozen-tower inputs (borrowed)
  Matrix slice_embeddings;  // post-adapter
  embed::AttentionPoolCache attention;
  embed::LiteTransformerCache lite;
  Vector aggregated;
  embed::ProjectorCache projector;
  Vector projector_out;
  Vector volume_unit;
  double volume_norm = 0.0;
  Vector text_embedding;  // post-adapter
  embed::ProjectorCache text_projector;
  Vector text_projector_out;
  Vector text_unit;
  double text_norm = 0.0;
};

struct BatchCache {
  std::vector<StudyForwardCache> studies;
  Matrix volume, text;  // d x B unit embeddings
  Matrix similarity;    // B x B
  PositiveSets positives;
  double loss = 0.0;
};

/// Embeds every study in the batch through adapters, aggregation, projector,
/// and normalization, then evaluates the multi-positive loss.
double model_forward(const ModelParams& params, const std::vector<const StudyFeatures*>& batch,
                     const PositiveSets& positives, bool train_mode, std::uint64_t dropout_seed,
                     BatchCache* cache);

/// Accumulates analytic gradients for every trainable parameter.
void model_backward(const ModelParams& params, const BatchCache& cache, ModelGrads& grads);

/// Inference-mode volume/text embedding for one study (unit-normalized).
Vector embed_volume(const ModelParams& params, const StudyFeatures& study);
Vector embed_text(const ModelParams& params, const StudyFeatures& study);

}  // namespace vlct::train
