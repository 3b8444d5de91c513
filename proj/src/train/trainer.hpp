#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "train/model.hpp"
#include "train/optimizer.hpp"

namespace vlct::train {

struct TrainConfig {
  double lr = 5e-5;
  double weight_decay = 1e-2;
  int batch_size = 8;
  int max_epochs = 10;
  int patience = 3;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochMetrics {
  int epoch;  // 0 = pre-training evaluation
  double train_loss;
  double val_loss;
  double tau;
};

/// Early-stop bookkeeping shared by the training loop and its tests:
/// improvement is a strict decrease of the validation loss (ties resolve to
/// the earlier epoch); stop after `patience` consecutive non-improving epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Feed epochs in order starting at 1; returns true when training should
  /// stop after this epoch.
  bool observe(int epoch, double val_loss) {
    if (val_loss < best_val_) {
      best_val_ = val_loss;
      best_epoch_ = epoch;
      bad_epochs_ = 0;
      return false;
    }
    return ++bad_epochs_ >= patience_;
  }

  int best_epoch() const { return best_epoch_; }
  bool improved_at(int epoch) const { return best_epoch_ == epoch; }

 private:
  int patience_;
  double best_val_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int bad_epochs_ = 0;
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = 0;
  std::vector<EpochMetrics> history;
};

/// Deterministic full-precision training loop: seeded epoch shuffles (short
/// final batch kept), gradient clipping at clip_norm, decoupled-weight-decay
/// Adam, validation loss after every epoch, early stop after `patience`
/// consecutive non-improving epochs. Improvement is strict, so ties resolve
/// toward the earlier epoch; the best-validation checkpoint is returned.
/// The optional metrics log receives one {epoch, train_loss, val_loss, tau}
/// record per line.
TrainResult train(const std::vector<StudyFeatures>& train_set,
                  const std::vector<StudyFeatures>& val_set, const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  const std::filesystem::path& metrics_log = {});

/// Mean loss over the set in eval mode, batched in fixed order.
double evaluate_loss(const ModelParams& params, const std::vector<StudyFeatures>& set,
                     int batch_size);

}  // namespace vlct::train
