#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "geocnn/dataset.hpp"
#include "geocnn/network.hpp"
#include "geocnn/optimizers.hpp"

namespace geocnn {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::size_t patience = 10;  // use kNoEarlyStop to disable
  double min_delta = 1e-6;    // val-loss improvement threshold, absolute
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;

  static constexpr std::size_t kNoEarlyStop = std::numeric_limits<std::size_t>::max();

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
  std::size_t best_epoch = 0;  // 1-based; weights from this epoch are restored
};

// Tracks the best validation loss. An epoch improves only when its loss is
// below best - min_delta; training stops after `patience` consecutive epochs
// without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience, double min_delta = 1e-6);

  // Feeds the next epoch's validation loss; returns true if it is a new best.
  bool update(double val_loss);
  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  double min_delta_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

struct Evaluation {
  double mean_loss = 0.0;
  std::vector<std::size_t> predictions;

  double accuracy(const std::vector<std::size_t>& labels) const;
};

// Forward-only pass over a dataset: mean cross-entropy and argmax predictions
// (lowest index wins ties). Items are evaluated in parallel; the loss is
// reduced in item order so the result does not depend on thread count.
template <typename T>
Evaluation evaluate(const Network<T>& net, const Dataset& ds);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch training with the mean gradient over each batch, one optimizer
// step per batch and a full validation pass per epoch. Restores the weights
// of the best validation epoch before returning. Deterministic for a given
// config seed. Throws TrainingError on a non-finite loss.
template <typename T>
TrainHistory train(Network<T>& net, const Dataset& train_set, const Dataset& val_set,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace geocnn
