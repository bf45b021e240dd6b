#include "geocnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iterator>
#include <type_traits>

#include "geocnn/errors.hpp"

namespace geocnn {
namespace {

// Gradients of a batch are split into this many contiguous shards, each run on
// its own network replica and summed in shard order. Fixed so that results do
// not depend on the number of threads.
constexpr std::size_t kGradShards = 8;

template <typename T>
Tensor<T> as_input(const Image& img) {
  if constexpr (std::is_same_v<T, float>) {
    return img;
  } else {
    return img.cast<T>();
  }
}

template <typename T>
std::size_t argmax(const Tensor<T>& t) {
  const auto d = t.data();
  return static_cast<std::size_t>(std::distance(d.begin(), std::max_element(d.begin(), d.end())));
}

template <typename T>
void check_compatible(const Network<T>& net, const Dataset& ds, const char* what) {
  if (ds.encoder.size() != net.num_classes()) {
    throw DataError(std::string(what) + " set has " + std::to_string(ds.encoder.size()) +
                    " classes but the network outputs " + std::to_string(net.num_classes()));
  }
  if (ds.empty()) throw DataError(std::string(what) + " set is empty");
}

template <typename T>
void copy_values(const std::vector<NamedParam<T>>& from, const std::vector<NamedParam<T>>& to) {
  for (std::size_t i = 0; i < from.size(); ++i) to[i].param->value = from[i].param->value;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw Error("epochs must be >= 1");
  if (batch_size == 0) throw Error("batch size must be >= 1");
  if (patience == 0) throw Error("patience must be >= 1");
  if (!(min_delta >= 0.0)) throw Error("min_delta must be >= 0");
  if (!(optimizer.lr > 0.0)) throw Error("learning rate must be > 0");
}

EarlyStopping::EarlyStopping(std::size_t patience, double min_delta)
    : patience_(patience), min_delta_(min_delta) {
  if (patience == 0) throw Error("patience must be >= 1");
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  if (val_loss < best_loss_ - min_delta_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

double Evaluation::accuracy(const std::vector<std::size_t>& labels) const {
  if (labels.size() != predictions.size()) {
    throw ShapeError("accuracy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(predictions.size()) + " predictions");
  }
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += labels[i] == predictions[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

template <typename T>
Evaluation evaluate(const Network<T>& net, const Dataset& ds) {
  check_compatible(net, ds, "evaluation");
  net.validate();
  const std::size_t n = ds.size();
  std::vector<double> losses(n);
  Evaluation out;
  out.predictions.resize(n);
  std::vector<std::exception_ptr> errors(n);
  const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const auto& item = ds.items[k];
      const LossResult<T> r = softmax_cross_entropy(net.logits(as_input<T>(item.pixels)), item.label);
      losses[k] = static_cast<double>(r.loss);
      out.predictions[k] = argmax(r.probs);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  double sum = 0.0;
  for (double l : losses) sum += l;
  out.mean_loss = sum / static_cast<double>(n);
  return out;
}

template <typename T>
TrainHistory train(Network<T>& net, const Dataset& train_set, const Dataset& val_set,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  net.validate();
  check_compatible(net, train_set, "training");
  check_compatible(net, val_set, "validation");

  const std::size_t n = train_set.size();
  const std::size_t shards = std::min(kGradShards, config.batch_size);
  std::vector<Network<T>> replicas(shards, net);
  std::vector<std::vector<NamedParam<T>>> replica_params;
  for (auto& r : replicas) replica_params.push_back(r.parameters());
  const auto params = net.parameters();

  Optimizer<T> optimizer(config.optimizer);
  EarlyStopping stopper(config.patience, config.min_delta);
  std::vector<Tensor<T>> best_values;
  TrainHistory history;

  std::vector<double> losses(n);
  std::vector<char> correct(n);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(n, config.batch_size, true, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      const std::size_t used = std::min(shards, batch.size());
      std::vector<std::exception_ptr> errors(used);
      const std::int64_t count = static_cast<std::int64_t>(used);
#pragma omp parallel for schedule(static, 1)
      for (std::int64_t s = 0; s < count; ++s) {
        const auto k = static_cast<std::size_t>(s);
        try {
          auto& replica = replicas[k];
          copy_values(params, replica_params[k]);
          replica.zero_grad();
          const std::size_t lo = k * batch.size() / used;
          const std::size_t hi = (k + 1) * batch.size() / used;
          for (std::size_t j = lo; j < hi; ++j) {
            const auto& item = train_set.items[batch[j]];
            auto [loss, probs] = replica.accumulate_gradients(as_input<T>(item.pixels), item.label);
            losses[batch[j]] = static_cast<double>(loss);
            correct[batch[j]] = argmax(probs) == item.label;
          }
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      for (std::size_t j : batch) {
        if (!std::isfinite(losses[j])) {
          throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                                  ", batch " + std::to_string(b + 1),
                              epoch, b + 1);
        }
      }

      for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor<T>& grad = params[p].param->grad;
        grad = replica_params[0][p].param->grad;
        for (std::size_t k = 1; k < used; ++k) grad += replica_params[k][p].param->grad;
      }
      net.scale_grads(static_cast<T>(1.0 / static_cast<double>(batch.size())));
      optimizer.step(params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      loss_sum += losses[i];
      hits += static_cast<std::size_t>(correct[i]);
    }
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_acc = static_cast<double>(hits) / static_cast<double>(n);
    const Evaluation val = evaluate(net, val_set);
    rec.val_loss = val.mean_loss;
    rec.val_acc = val.accuracy(val_set.labels());
    if (!std::isfinite(rec.val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch), epoch,
                          0);
    }
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (stopper.update(rec.val_loss)) {
      best_values.clear();
      for (const auto& p : params) best_values.push_back(p.param->value);
    }
    if (stopper.should_stop()) {
      history.stopped_early = epoch < config.epochs;
      break;
    }
  }

  history.best_epoch = stopper.best_epoch();
  for (std::size_t p = 0; p < params.size(); ++p) params[p].param->value = best_values[p];
  net.zero_grad();
  return history;
}

template Evaluation evaluate(const Network<float>&, const Dataset&);
template Evaluation evaluate(const Network<double>&, const Dataset&);
template TrainHistory train(Network<float>&, const Dataset&, const Dataset&, const TrainConfig&,
                            const EpochCallback&);
template TrainHistory train(Network<double>&, const Dataset&, const Dataset&, const TrainConfig&,
                            const EpochCallback&);

}  // namespace geocnn
