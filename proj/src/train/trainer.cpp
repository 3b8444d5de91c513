#include "train/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "common/rng.hpp"

namespace vlct::train {

void TrainConfig::validate() const {
  require(lr > 0 && weight_decay >= 0 && batch_size >= 1 && max_epochs >= 1 && patience >= 1 &&
              clip_norm > 0,
          errc::invalid_config, "train config fields must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},
          {"weight_decay", weight_decay},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"clip_norm", clip_norm},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  return c;
}

namespace {

double batch_loss(const ModelParams& params, const std::vector<StudyFeatures>& set,
                  const std::vector<int>& idx, std::size_t begin, std::size_t end,
                  bool train_mode, std::uint64_t dropout_seed, BatchCache* cache) {
  std::vector<const StudyFeatures*> batch;
  std::vector<std::string> texts;
  batch.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    batch.push_back(&set[idx[i]]);
    texts.push_back(set[idx[i]].normalized_impression);
  }
  const PositiveSets positives = build_positive_sets(texts);
  return model_forward(params, batch, positives, train_mode, dropout_seed, cache);
}

}  // namespace

double evaluate_loss(const ModelParams& params, const std::vector<StudyFeatures>& set,
                     int batch_size) {
  require(!set.empty(), errc::empty_split, "cannot evaluate an empty split");
  std::vector<int> idx(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) idx[i] = static_cast<int>(i);
  double total = 0.0;
  for (std::size_t at = 0; at < set.size(); at += batch_size) {
    const std::size_t end = std::min(set.size(), at + batch_size);
    total += batch_loss(params, set, idx, at, end, false, 0, nullptr) *
             static_cast<double>(end - at);
  }
  return total / static_cast<double>(set.size());
}

TrainResult train(const std::vector<StudyFeatures>& train_set,
                  const std::vector<StudyFeatures>& val_set, const ModelConfig& model_config,
                  const TrainConfig& train_config, const std::filesystem::path& metrics_log) {
  train_config.validate();
  require(!train_set.empty() && !val_set.empty(), errc::empty_split,
          "train and validation splits must be nonempty");
  {
    std::set<std::string> train_ids;
    for (const auto& s : train_set) train_ids.insert(s.study_id);
    for (const auto& s : val_set) {
      require(!train_ids.count(s.study_id), errc::invalid_config,
              "train/validation study ids overlap: " + s.study_id);
    }
  }

  ModelParams params = ModelParams::init(model_config, train_config.seed);
  AdamWConfig opt_cfg;
  opt_cfg.lr = train_config.lr;
  opt_cfg.weight_decay = train_config.weight_decay;
  opt_cfg.beta1 = train_config.beta1;
  opt_cfg.beta2 = train_config.beta2;
  opt_cfg.eps = train_config.eps;
  AdamW optimizer(opt_cfg);

  std::ofstream log;
  if (!metrics_log.empty()) {
    if (metrics_log.has_parent_path()) std::filesystem::create_directories(metrics_log.parent_path());
    log.open(metrics_log, std::ios::trunc);
  }
  auto log_epoch = [&](const EpochMetrics& m) {
    if (!log.is_open()) return;
    const json rec = {
        {"epoch", m.epoch}, {"train_loss", m.train_loss}, {"val_loss", m.val_loss}, {"tau", m.tau}};
    log << rec.dump() << '\n';
    log.flush();
  };

  TrainResult result;
  EpochMetrics initial{0, evaluate_loss(params, train_set, train_config.batch_size),
                       evaluate_loss(params, val_set, train_config.batch_size), params.tau()};
  result.history.push_back(initial);
  log_epoch(initial);

  std::vector<int> idx(train_set.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);

  EarlyStopper stopper(train_config.patience);

  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(train_config.seed, "shuffle", epoch));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
    }

    double train_total = 0.0;
    int step = 0;
    for (std::size_t at = 0; at < idx.size(); at += train_config.batch_size, ++step) {
      const std::size_t end = std::min(idx.size(), at + train_config.batch_size);
      BatchCache cache;
      const std::uint64_t dropout_seed =
          derive_seed(train_config.seed, "dropout", epoch, step);
      const double loss =
          batch_loss(params, train_set, idx, at, end, true, dropout_seed, &cache);
      train_total += loss * static_cast<double>(end - at);

      ModelGrads grads = make_zero_grads(params);
      model_backward(params, cache, grads);
      const auto gb = grad_blocks(grads, params);
      check_finite(gb);
      clip_gradient_norm(gb, train_config.clip_norm);
      optimizer.step(param_blocks(params), gb);
    }

    EpochMetrics m{epoch, train_total / static_cast<double>(train_set.size()),
                   evaluate_loss(params, val_set, train_config.batch_size), params.tau()};
    result.history.push_back(m);
    log_epoch(m);

    const bool stop = stopper.observe(epoch, m.val_loss);
    if (stopper.improved_at(epoch)) {
      result.best_params = params;  // checkpoint copy
      result.best_epoch = epoch;
    }
    if (stop) break;
  }

  require(result.best_epoch >= 1, errc::internal, "no epoch completed");
  return result;
}

}  // namespace vlct::train
