#include "train/model.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace vlct::train {

const char* aggregator_name(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::kMean: return "mean";
    case AggregatorKind::kAttention: return "attention";
    case AggregatorKind::kLiteTransformer: return "lite_transformer";
  }
  return "?";
}

AggregatorKind aggregator_from_name(const std::string& name) {
  if (name == "mean") return AggregatorKind::kMean;
  if (name == "attention") return AggregatorKind::kAttention;
  if (name == "lite_transformer") return AggregatorKind::kLiteTransformer;
  fail(errc::invalid_config, "unknown aggregator: " + name);
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"dim", dim},
      {"aggregator", aggregator_name(aggregator)},
      {"lora", {{"rank", lora.rank}, {"vision", lora.vision}, {"text", lora.text}}},
      {"projector_on_text", projector_on_text},
      {"dropout", dropout},
      {"heads", heads},
      {"max_slices", max_slices},
      {"init_sigma", init_sigma},
      {"tau_init", tau_init},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.value("dim", c.dim);
  c.aggregator = aggregator_from_name(j.value("aggregator", "mean"));
  if (j.contains("lora")) {
    const auto& l = j.at("lora");
    c.lora.rank = l.value("rank", c.lora.rank);
    c.lora.vision = l.value("vision", c.lora.vision);
    c.lora.text = l.value("text", c.lora.text);
  }
  c.projector_on_text = j.value("projector_on_text", c.projector_on_text);
  c.dropout = j.value("dropout", c.dropout);
  c.heads = j.value("heads", c.heads);
  c.max_slices = j.value("max_slices", c.max_slices);
  c.init_sigma = j.value("init_sigma", c.init_sigma);
  c.tau_init = j.value("tau_init", c.tau_init);
  return c;
}

double ModelParams::tau() const { return std::exp(log_tau); }

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  require(config.dim >= 1, errc::invalid_config, "model dimension must be >= 1");
  require(config.tau_init > 0.0, errc::invalid_temperature, "initial temperature must be > 0");
  ModelParams p;
  p.config = config;
  if (config.lora.vision) {
    require(config.lora.rank >= 1, errc::invalid_config, "adapter rank must be >= 1");
    p.vision_lora = embed::LoraAdapter::init(config.dim, config.dim, config.lora.rank,
                                             derive_seed(seed, "vision_lora"),
                                             config.init_sigma);
  }
  if (config.lora.text) {
    p.text_lora = embed::LoraAdapter::init(config.dim, config.dim, config.lora.rank,
                                           derive_seed(seed, "text_lora"), config.init_sigma);
  }
  switch (config.aggregator) {
    case AggregatorKind::kMean:
      break;
    case AggregatorKind::kAttention:
      p.attention = embed::AttentionPoolParams::init(config.dim, seed, config.init_sigma);
      break;
    case AggregatorKind::kLiteTransformer:
      p.lite = embed::LiteTransformerParams::init(config.dim, config.max_slices, config.heads,
                                                  seed, config.init_sigma);
      break;
  }
  p.projector = embed::ProjectorParams::init(config.dim, config.dim,
                                             derive_seed(seed, "vision_projector"),
                                             config.init_sigma, config.dropout);
  if (config.projector_on_text) {
    p.text_projector = embed::ProjectorParams::init(config.dim, config.dim,
                                                    derive_seed(seed, "text_projector"),
                                                    config.init_sigma, config.dropout);
  }
  p.log_tau = std::log(config.tau_init);
  return p;
}

ModelGrads make_zero_grads(const ModelParams& p) {
  ModelGrads g;
  auto zeros_like = [](const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); };
  if (p.vision_lora) {
    g.vision_lora = embed::LoraGrad{zeros_like(p.vision_lora->a), zeros_like(p.vision_lora->b)};
  }
  if (p.text_lora) {
    g.text_lora = embed::LoraGrad{zeros_like(p.text_lora->a), zeros_like(p.text_lora->b)};
  }
  if (p.attention) g.attention = embed::AttentionPoolGrad{Vector::Zero(p.attention->q.size())};
  if (p.lite) {
    embed::LiteTransformerGrad lg;
    lg.cls = Vector::Zero(p.lite->cls.size());
    lg.pos = zeros_like(p.lite->pos);
    lg.wq = zeros_like(p.lite->wq);
    lg.wk = zeros_like(p.lite->wk);
    lg.wv = zeros_like(p.lite->wv);
    lg.wo = zeros_like(p.lite->wo);
    lg.bq = Vector::Zero(p.lite->bq.size());
    lg.bk = Vector::Zero(p.lite->bk.size());
    lg.bv = Vector::Zero(p.lite->bv.size());
    lg.bo = Vector::Zero(p.lite->bo.size());
    lg.ln1_gamma = Vector::Zero(p.lite->ln1_gamma.size());
    lg.ln1_beta = Vector::Zero(p.lite->ln1_beta.size());
    lg.ln2_gamma = Vector::Zero(p.lite->ln2_gamma.size());
    lg.ln2_beta = Vector::Zero(p.lite->ln2_beta.size());
    lg.w1 = zeros_like(p.lite->w1);
    lg.b1 = Vector::Zero(p.lite->b1.size());
    lg.w2 = zeros_like(p.lite->w2);
    lg.b2 = Vector::Zero(p.lite->b2.size());
    g.lite = std::move(lg);
  }
  auto zero_projector = [&](const embed::ProjectorParams& pp) {
    embed::ProjectorGrad pg;
    pg.ln_gamma = Vector::Zero(pp.ln_gamma.size());
    pg.ln_beta = Vector::Zero(pp.ln_beta.size());
    pg.w1 = zeros_like(pp.w1);
    pg.b1 = Vector::Zero(pp.b1.size());
    pg.w2 = zeros_like(pp.w2);
    pg.b2 = Vector::Zero(pp.b2.size());
    return pg;
  };
  g.projector = zero_projector(p.projector);
  if (p.text_projector) g.text_projector = zero_projector(*p.text_projector);
  g.log_tau = 0.0;
  return g;
}

namespace {

void push(std::vector<ParamBlock>& out, Matrix& m, bool decay) {
  out.push_back({m.data(), static_cast<long>(m.size()), decay});
}
void push(std::vector<ParamBlock>& out, Vector& v, bool decay) {
  out.push_back({v.data(), static_cast<long>(v.size()), decay});
}
void push(std::vector<ParamBlock>& out, double& x, bool decay) { out.push_back({&x, 1, decay}); }

/// One enumeration serves params and grads; t may be ModelParams or
/// ModelGrads (their member layouts mirror each other).
template <typename T>
std::vector<ParamBlock> enumerate_blocks(T& t) {
  std::vector<ParamBlock> out;
  if (t.vision_lora) {
    push(out, t.vision_lora->a, true);
    push(out, t.vision_lora->b, true);
  }
  if (t.text_lora) {
    push(out, t.text_lora->a, true);
    push(out, t.text_lora->b, true);
  }
  if (t.attention) push(out, t.attention->q, true);
  if (t.lite) {
    auto& l = *t.lite;
    push(out, l.cls, true);
    push(out, l.pos, true);
    push(out, l.wq, true);
    push(out, l.bq, false);
    push(out, l.wk, true);
    push(out, l.bk, false);
    push(out, l.wv, true);
    push(out, l.bv, false);
    push(out, l.wo, true);
    push(out, l.bo, false);
    push(out, l.ln1_gamma, false);
    push(out, l.ln1_beta, false);
    push(out, l.ln2_gamma, false);
    push(out, l.ln2_beta, false);
    push(out, l.w1, true);
    push(out, l.b1, false);
    push(out, l.w2, true);
    push(out, l.b2, false);
  }
  auto push_projector = [&out](auto& pp) {
    push(out, pp.ln_gamma, false);
    push(out, pp.ln_beta, false);
    push(out, pp.w1, true);
    push(out, pp.b1, false);
    push(out, pp.w2, true);
    push(out, pp.b2, false);
  };
  push_projector(t.projector);
  if (t.text_projector) push_projector(*t.text_projector);
  push(out, t.log_tau, false);
  return out;
}

}  // namespace

std::vector<ParamBlock> param_blocks(ModelParams& params) { return enumerate_blocks(params); }

std::vector<ParamBlock> grad_blocks(ModelGrads& grads, const ModelParams& shape) {
  (void)shape;
  return enumerate_blocks(grads);
}

long param_count(const ModelParams& params) {
  long n = 0;
  for (const ParamBlock& b : param_blocks(const_cast<ModelParams&>(params))) n += b.size;
  return n;
}

Vector flatten(const ModelParams& params) {
  auto blocks = param_blocks(const_cast<ModelParams&>(params));
  long total = 0;
  for (const auto& b : blocks) total += b.size;
  Vector flat(total);
  long at = 0;
  for (const auto& b : blocks) {
    for (long i = 0; i < b.size; ++i) flat[at++] = b.data[i];
  }
  return flat;
}

void unflatten(ModelParams& params, const Vector& flat) {
  auto blocks = param_blocks(params);
  long total = 0;
  for (const auto& b : blocks) total += b.size;
  require(flat.size() == total, errc::shape_mismatch, "flat parameter size mismatch");
  long at = 0;
  for (const auto& b : blocks) {
    for (long i = 0; i < b.size; ++i) b.data[i] = flat[at++];
  }
}

namespace {

Vector aggregate_forward(const ModelParams& p, const Matrix& e, StudyForwardCache& c) {
  switch (p.config.aggregator) {
    case AggregatorKind::kMean:
      return embed::mean_pool(e);
    case AggregatorKind::kAttention:
      return embed::attention_pool(e, *p.attention, &c.attention);
    case AggregatorKind::kLiteTransformer:
      return embed::lite_transformer_forward(e, *p.lite, &c.lite);
  }
  fail(errc::internal, "unreachable aggregator");
}

Matrix aggregate_backward(const ModelParams& p, const StudyForwardCache& c,
                          const Vector& grad_out, ModelGrads& g) {
  switch (p.config.aggregator) {
    case AggregatorKind::kMean: {
      const int s = static_cast<int>(c.slice_embeddings.cols());
      return (grad_out / static_cast<double>(s)).replicate(1, s);
    }
    case AggregatorKind::kAttention:
      return embed::attention_pool_backward(c.attention, grad_out, *p.attention, *g.attention);
    case AggregatorKind::kLiteTransformer:
      return embed::lite_transformer_backward(c.lite, grad_out, *p.lite, *g.lite);
  }
  fail(errc::internal, "unreachable aggregator");
}

}  // namespace

double model_forward(const ModelParams& params, const std::vector<const StudyFeatures*>& batch,
                     const PositiveSets& positives, bool train_mode, std::uint64_t dropout_seed,
                     BatchCache* cache) {
  const int n = static_cast<int>(batch.size());
  require(n >= 1, errc::empty_input, "empty batch");
  require(positives.size() == n, errc::shape_mismatch, "positive sets do not match batch");
  const int d = params.config.dim;

  BatchCache local;
  BatchCache& cc = cache != nullptr ? *cache : local;
  cc.studies.assign(n, StudyForwardCache{});
  cc.volume.resize(d, n);
  cc.text.resize(d, n);
  cc.positives = positives;

  for (int b = 0; b < n; ++b) {
    const StudyFeatures& f = *batch[b];
    require(f.slice_features.rows() == d && f.text_features.size() == d, errc::shape_mismatch,
            "study features do not match model dimension");
    StudyForwardCache& sc = cc.studies[b];
    sc.features = &f;

    sc.slice_embeddings = params.vision_lora
                              ? embed::lora_identity_apply(*params.vision_lora, f.slice_features)
                              : f.slice_features;
    sc.aggregated = aggregate_forward(params, sc.slice_embeddings, sc);
    sc.projector_out =
        embed::projector_forward(sc.aggregated, params.projector, train_mode,
                                 derive_seed(dropout_seed, "vision_dropout", b), &sc.projector);
    sc.volume_norm = sc.projector_out.norm();
    require(sc.volume_norm > 1e-150, errc::zero_vector, "volume embedding collapsed to zero");
    sc.volume_unit = sc.projector_out / sc.volume_norm;
    cc.volume.col(b) = sc.volume_unit;

    sc.text_embedding = params.text_lora
                            ? embed::lora_identity_apply(*params.text_lora, f.text_features)
                            : f.text_features;
    const Vector* text_final = &sc.text_embedding;
    if (params.text_projector) {
      sc.text_projector_out = embed::projector_forward(
          sc.text_embedding, *params.text_projector, train_mode,
          derive_seed(dropout_seed, "text_dropout", b), &sc.text_projector);
      text_final = &sc.text_projector_out;
    }
    sc.text_norm = text_final->norm();
    require(sc.text_norm > 1e-150, errc::zero_vector, "text embedding collapsed to zero");
    sc.text_unit = *text_final / sc.text_norm;
    cc.text.col(b) = sc.text_unit;
  }

  cc.similarity = cc.volume.transpose() * cc.text;
  cc.loss = multipositive_loss(cc.similarity, positives, params.tau());
  return cc.loss;
}

void model_backward(const ModelParams& params, const BatchCache& cache, ModelGrads& grads) {
  const int n = static_cast<int>(cache.studies.size());
  Matrix g_sim;
  double g_log_tau = 0.0;
  multipositive_loss_grad(cache.similarity, cache.positives, params.tau(), &g_sim, &g_log_tau);
  grads.log_tau += g_log_tau;

  const Matrix g_volume = cache.text * g_sim.transpose();  // d x B
  const Matrix g_text = cache.volume * g_sim;              // d x B

  for (int b = 0; b < n; ++b) {
    const StudyForwardCache& sc = cache.studies[b];
    const StudyFeatures& f = *sc.features;

    // vision path
    Vector g_proj_out =
        embed::l2_normalize_backward(g_volume.col(b), sc.volume_unit, sc.volume_norm);
    Vector g_agg =
        embed::projector_backward(sc.projector, g_proj_out, params.projector, grads.projector);
    Matrix g_slices = aggregate_backward(params, sc, g_agg, grads);
    if (params.vision_lora) {
      embed::lora_identity_backward(*params.vision_lora, f.slice_features, g_slices,
                                    *grads.vision_lora);
    }

    // text path
    Vector g_t = embed::l2_normalize_backward(g_text.col(b), sc.text_unit, sc.text_norm);
    if (params.text_projector) {
      g_t = embed::projector_backward(sc.text_projector, g_t, *params.text_projector,
                                      *grads.text_projector);
    }
    if (params.text_lora) {
      embed::lora_identity_backward(*params.text_lora, Matrix(f.text_features), Matrix(g_t),
                                    *grads.text_lora);
    }
  }
}

Vector embed_volume(const ModelParams& params, const StudyFeatures& study) {
  StudyForwardCache sc;
  Matrix e = params.vision_lora
                 ? embed::lora_identity_apply(*params.vision_lora, study.slice_features)
                 : study.slice_features;
  sc.slice_embeddings = e;
  Vector agg = aggregate_forward(params, e, sc);
  Vector out = embed::projector_forward(agg, params.projector, false, 0, nullptr);
  return embed::l2_normalize(out);
}

Vector embed_text(const ModelParams& params, const StudyFeatures& study) {
  Vector z = study.text_features;
  if (params.text_lora) z = embed::lora_identity_apply(*params.text_lora, z);
  if (params.text_projector) {
    z = embed::projector_forward(z, *params.text_projector, false, 0, nullptr);
  }
  return embed::l2_normalize(z);
}

}  // namespace vlct::train
