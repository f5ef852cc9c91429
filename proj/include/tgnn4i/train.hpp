#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgnn4i/loss.hpp"
#include "tgnn4i/models.hpp"
#include "tgnn4i/sequence.hpp"

namespace tgnn4i {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  ModelConfig model;
  LossConfig loss;  // training objective, also used for validation
  double learning_rate = 1e-3;
  Index batch_size = 16;
  Index max_epochs = 300;
  Index patience = 20;
  std::uint64_t seed = 0;
  Index workers = 1;

  void validate() const;

  /// Flat key-value JSON; `workers` is left out since it never changes results.
  std::string to_json() const;
  /// Applies the keys present in a flat JSON object; unknown keys throw.
  void apply_json(const std::string& text);
  /// FNV-1a of to_json(), as 16 hex digits.
  std::string hash() const;
};

/// The metric: sequence loss with exponential(0.04) weighting, N_init = 5,
/// N_max = 10.
LossConfig metric_loss_config();

constexpr double kBinWidth = 0.02;
/// Metric reports are multiplied by this.
constexpr double kMetricScale = 100.0;

struct BinStat {
  double lower = 0.0;
  double upper = 0.0;
  double mse = 0.0;  // mean of per-prediction squared errors
  Index count = 0;
  friend bool operator==(const BinStat&, const BinStat&) = default;
};

struct EvaluationResult {
  double loss = 0.0;  // mean sequence loss
  std::vector<BinStat> bins;
  Index predictions = 0;
};

/// Bins of width kBinWidth from 0, contiguous up to the largest occupied one.
std::vector<BinStat> bin_errors(std::span<const PredictionError> errors);

EvaluationResult evaluate(const Forecaster& model, std::span<const ObservationSequence> sequences,
                          const LossConfig& config, Index workers = 1);

struct MetricsReport {
  std::vector<double> train_curve;  // mean training loss per epoch
  std::vector<double> val_curve;    // validation loss per epoch
  Index best_epoch = -1;            // 0-based, -1 without training
  double test_metric = 0.0;         // metric loss on test, times kMetricScale
  std::vector<BinStat> test_bins;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  /// `lower,upper,mse,count` rows for the test bins.
  std::string bins_csv() const;

  /// Everything but wall-clock time.
  friend bool operator==(const MetricsReport& a, const MetricsReport& b);
};

struct TrainResult {
  std::unique_ptr<Forecaster> model;
  MetricsReport report;
};

/// Called after every epoch with (epoch, train loss, validation loss).
using EpochCallback = std::function<void(Index, double, double)>;

/// Adam on shuffled batches grouped by sequence length, early stopping on
/// validation loss; returns the best model evaluated on test. Models without
/// parameters are only evaluated.
TrainResult train(const TrainConfig& config, const DatasetSplit& data, const EpochCallback& on_epoch = {});

/// Loss of one sequence; gradients are added into the model's store scaled by
/// `grad_weight` when it is nonzero.
double sequence_objective(Forecaster& model, const ObservationSequence& seq, const LossConfig& config,
                          double grad_weight);

}  // namespace tgnn4i
