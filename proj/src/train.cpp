#include "tgnn4i/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include "json.hpp"
#include <random>
#include <sstream>
#include <thread>

#include "tgnn4i/dataset.hpp"
#include "tgnn4i/hash.hpp"
#include "tgnn4i/optimizer.hpp"

namespace tgnn4i {

namespace {

using Json = nlohmann::ordered_json;

// Runs fn(i) for i in [0, count) on up to `workers` threads; the first
// exception is rethrown after all threads join.
template <typename F>
void parallel_for(Index count, Index workers, F&& fn) {
  workers = std::clamp<Index>(workers, 1, std::max<Index>(count, 1));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (Index w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

struct SequenceResult {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> grads;
};

SequenceResult run_sequence(const Forecaster& model, const ObservationSequence& seq, const LossConfig& config,
                            bool with_grad) {
  ad::Tape tape;
  const BoundParameters bound = model.bind(tape);
  const PredictionSet preds = model.unroll(bound, seq, config.unroll());
  const ad::Var loss = sequence_loss(preds, seq, config);
  SequenceResult out;
  out.loss = loss.value()(0, 0);
  if (with_grad && model.trainable()) {
    tape.backward(loss, {.release_intermediates = true});
    for (std::size_t i = 0; i < model.parameters().size(); ++i) out.grads.push_back(tape.grad(bound[ParamId{i}]));
  }
  return out;
}

Json bins_to_json(const std::vector<BinStat>& bins) {
  Json arr = Json::array();
  for (const auto& b : bins) arr.push_back({{"lower", b.lower}, {"upper", b.upper}, {"mse", b.mse}, {"count", b.count}});
  return arr;
}

std::string weight_kind_name(WeightKind kind) {
  switch (kind) {
    case WeightKind::Constant: return "constant";
    case WeightKind::Exponential: return "exponential";
    case WeightKind::Gaussian: return "gaussian";
    case WeightKind::Indicator: return "indicator";
  }
  return "constant";
}

WeightKind parse_weight_kind(const std::string& name) {
  for (auto k : {WeightKind::Constant, WeightKind::Exponential, WeightKind::Gaussian, WeightKind::Indicator})
    if (weight_kind_name(k) == name) return k;
  throw ConfigError("unknown weight kind '" + name + "'");
}

}  // namespace

LossConfig metric_loss_config() {
  LossConfig c;
  c.weight = WeightFunction::exponential(0.04);
  c.warmup = 5;
  c.horizon = 10;
  return c;
}

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (batch_size < 1) throw ConfigError("train: batch size must be positive");
  if (max_epochs < 1) throw ConfigError("train: max epochs must be positive");
  if (patience < 0) throw ConfigError("train: patience must be non-negative");
  if (workers < 1) throw ConfigError("train: workers must be positive");
}

std::string TrainConfig::to_json() const {
  Json j;
  j["model"] = std::string(to_string(model.kind));
  j["dynamics"] = std::string(to_string(model.dynamics));
  j["latent_dim"] = model.latent_dim;
  j["gru_layers"] = model.gru_layers;
  j["readout_gnn_layers"] = model.readout_gnn_layers;
  j["readout_fc_layers"] = model.readout_fc_layers;
  j["weight"] = weight_kind_name(loss.weight.kind);
  j["weight_scale"] = loss.weight.scale;
  j["weight_center"] = loss.weight.center;
  j["weight_lower"] = loss.weight.lower;
  j["weight_upper"] = loss.weight.upper;
  j["warmup"] = loss.warmup;
  j["horizon"] = loss.horizon;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["seed"] = seed;
  return j.dump();
}

void TrainConfig::apply_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a flat JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (value.is_structured()) throw ConfigError("config: value of '" + key + "' must be a scalar");
      if (key == "model") {
        model.kind = parse_model_kind(value.get<std::string>());
      } else if (key == "dynamics") {
        model.dynamics = parse_dynamics_kind(value.get<std::string>());
      } else if (key == "latent_dim") {
        model.latent_dim = value.get<Index>();
      } else if (key == "gru_layers") {
        model.gru_layers = value.get<Index>();
      } else if (key == "readout_gnn_layers") {
        model.readout_gnn_layers = value.get<Index>();
      } else if (key == "readout_fc_layers") {
        model.readout_fc_layers = value.get<Index>();
      } else if (key == "weight") {
        const auto name = value.get<std::string>();
        if (name.size() == 2 && name[0] == 'w')
          loss.weight = weight_preset(name);
        else
          loss.weight.kind = parse_weight_kind(name);
      } else if (key == "weight_scale") {
        loss.weight.scale = value.get<double>();
      } else if (key == "weight_center") {
        loss.weight.center = value.get<double>();
      } else if (key == "weight_lower") {
        loss.weight.lower = value.get<double>();
      } else if (key == "weight_upper") {
        loss.weight.upper = value.get<double>();
      } else if (key == "warmup") {
        loss.warmup = value.get<Index>();
      } else if (key == "horizon") {
        loss.horizon = value.get<Index>();
      } else if (key == "learning_rate") {
        learning_rate = value.get<double>();
      } else if (key == "batch_size") {
        batch_size = value.get<Index>();
      } else if (key == "max_epochs") {
        max_epochs = value.get<Index>();
      } else if (key == "patience") {
        patience = value.get<Index>();
      } else if (key == "seed") {
        seed = value.get<std::uint64_t>();
      } else if (key == "workers") {
        workers = value.get<Index>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  } catch (const DynamicsError& e) {
    throw ConfigError(e.what());
  } catch (const LossError& e) {
    throw ConfigError(e.what());
  }
}

std::string TrainConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json())));
  return buf;
}

std::vector<BinStat> bin_errors(std::span<const PredictionError> errors) {
  std::vector<BinStat> bins;
  std::vector<double> sums;
  for (const auto& e : errors) {
    const auto b = static_cast<std::size_t>(std::floor(e.delta / kBinWidth));
    if (b >= bins.size()) {
      for (std::size_t k = bins.size(); k <= b; ++k)
        bins.push_back({static_cast<double>(k) * kBinWidth, static_cast<double>(k + 1) * kBinWidth, 0.0, 0});
      sums.resize(bins.size(), 0.0);
    }
    sums[b] += e.squared_error;
    ++bins[b].count;
  }
  for (std::size_t k = 0; k < bins.size(); ++k)
    if (bins[k].count > 0) bins[k].mse = sums[k] / static_cast<double>(bins[k].count);
  return bins;
}

EvaluationResult evaluate(const Forecaster& model, std::span<const ObservationSequence> sequences,
                          const LossConfig& config, Index workers) {
  if (sequences.empty()) throw ConfigError("evaluate: no sequences");
  const auto n = static_cast<Index>(sequences.size());
  std::vector<double> losses(static_cast<std::size_t>(n));
  std::vector<std::vector<PredictionError>> errors(static_cast<std::size_t>(n));
  parallel_for(n, workers, [&](Index i) {
    const auto& seq = sequences[static_cast<std::size_t>(i)];
    ad::Tape tape;
    const BoundParameters bound = model.bind(tape);
    const PredictionSet preds = model.unroll(bound, seq, config.unroll());
    losses[static_cast<std::size_t>(i)] = sequence_loss(preds, seq, config).value()(0, 0);
    errors[static_cast<std::size_t>(i)] = prediction_errors(preds, seq, config);
  });
  std::vector<PredictionError> all;
  for (auto& e : errors) all.insert(all.end(), e.begin(), e.end());
  EvaluationResult result;
  result.loss = batch_loss(losses);
  result.bins = bin_errors(all);
  result.predictions = static_cast<Index>(all.size());
  return result;
}

std::string MetricsReport::to_json() const {
  Json j;
  j["train_curve"] = train_curve;
  j["val_curve"] = val_curve;
  j["best_epoch"] = best_epoch;
  j["test_metric"] = test_metric;
  j["test_bins"] = bins_to_json(test_bins);
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  MetricsReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.train_curve = j.at("train_curve").get<std::vector<double>>();
    r.val_curve = j.at("val_curve").get<std::vector<double>>();
    r.best_epoch = j.at("best_epoch").get<Index>();
    r.test_metric = j.at("test_metric").get<double>();
    for (const auto& b : j.at("test_bins"))
      r.test_bins.push_back({b.at("lower").get<double>(), b.at("upper").get<double>(), b.at("mse").get<double>(),
                             b.at("count").get<Index>()});
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string MetricsReport::bins_csv() const {
  std::ostringstream out;
  out << "lower,upper,mse,count\n";
  char buf[128];
  for (const auto& b : test_bins) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%lld\n", b.lower, b.upper, b.mse, static_cast<long long>(b.count));
    out << buf;
  }
  return out.str();
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
  return a.train_curve == b.train_curve && a.val_curve == b.val_curve && a.best_epoch == b.best_epoch &&
         a.test_metric == b.test_metric && a.test_bins == b.test_bins && a.seed == b.seed &&
         a.config_hash == b.config_hash;
}

double sequence_objective(Forecaster& model, const ObservationSequence& seq, const LossConfig& config,
                          double grad_weight) {
  const SequenceResult r = run_sequence(model, seq, config, grad_weight != 0.0);
  for (std::size_t i = 0; i < r.grads.size(); ++i) model.parameters().at(i).grad += grad_weight * r.grads[i];
  return r.loss;
}

namespace {

// Errors that trained parameter values can trigger: non-finite tape values or
// decay rates that softplus rounded to zero.
bool numerical_failure(const std::exception& e) {
  return dynamic_cast<const ad::NumericalError*>(&e) != nullptr || dynamic_cast<const DynamicsError*>(&e) != nullptr;
}

}  // namespace

TrainResult train(const TrainConfig& config, const DatasetSplit& data, const EpochCallback& on_epoch) {
  const auto start = std::chrono::steady_clock::now();
  if (data.train.empty() || data.val.empty() || data.test.empty()) throw ConfigError("train: every split must be nonempty");
  TrainConfig shaped = config;
  ModelConfig& mc = shaped.model;
  mc.num_nodes = data.graph.num_nodes();
  mc.value_dim = data.value_dim;
  mc.feature_dim = data.feature_dim;
  shaped.validate();

  TrainResult result;
  result.model = make_model(mc, data.graph, config.seed);
  Forecaster& model = *result.model;
  MetricsReport& report = result.report;
  report.seed = config.seed;
  report.config_hash = config.hash();

  if (model.trainable()) {
    // Batches: sequences grouped by length, shuffled within groups, chunked.
    std::map<Index, std::vector<std::size_t>> by_length;
    for (std::size_t i = 0; i < data.train.size(); ++i) by_length[data.train[i].num_steps()].push_back(i);

    std::mt19937_64 rng = stream_rng(config.seed, 0x7261696e);
    Adam adam(model.parameters(), {.learning_rate = config.learning_rate});
    ParameterStore best = model.parameters();
    double best_val = std::numeric_limits<double>::infinity();
    Index since_best = 0;

    for (Index epoch = 0; epoch < config.max_epochs; ++epoch) {
      std::vector<std::vector<std::size_t>> batches;
      for (auto& [len, members] : by_length) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t b = 0; b < members.size(); b += static_cast<std::size_t>(config.batch_size)) {
          const auto end = std::min(members.size(), b + static_cast<std::size_t>(config.batch_size));
          batches.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(b),
                               members.begin() + static_cast<std::ptrdiff_t>(end));
        }
      }
      std::shuffle(batches.begin(), batches.end(), rng);

      double epoch_sum = 0.0;
      std::size_t epoch_count = 0;
      for (std::size_t b = 0; b < batches.size(); ++b) {
        const auto& batch = batches[b];
        std::vector<SequenceResult> results(batch.size());
        try {
          parallel_for(static_cast<Index>(batch.size()), config.workers, [&](Index i) {
            results[static_cast<std::size_t>(i)] =
                run_sequence(model, data.train[batch[static_cast<std::size_t>(i)]], config.loss, true);
          });
        } catch (const std::exception& e) {
          if (!numerical_failure(e)) throw;
          throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(b) + ": " + e.what());
        }
        model.parameters().zero_grad();
        const double scale = 1.0 / static_cast<double>(batch.size());
        double batch_sum = 0.0;
        for (const auto& r : results) {
          batch_sum += r.loss;
          for (std::size_t p = 0; p < r.grads.size(); ++p) model.parameters().at(p).grad += scale * r.grads[p];
        }
        if (!std::isfinite(batch_sum)) {
          throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(b) + ": loss is not finite");
        }
        adam.step(model.parameters());
        epoch_sum += batch_sum;
        epoch_count += batch.size();
      }
      const double train_loss = epoch_sum / static_cast<double>(epoch_count);
      double val_loss = 0.0;
      try {
        val_loss = evaluate(model, data.val, config.loss, config.workers).loss;
      } catch (const std::exception& e) {
        if (!numerical_failure(e)) throw;
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " during validation: " +
                              e.what());
      }
      if (!std::isfinite(val_loss))
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": validation loss is not finite");
      report.train_curve.push_back(train_loss);
      report.val_curve.push_back(val_loss);
      if (on_epoch) on_epoch(epoch, train_loss, val_loss);
      if (val_loss < best_val) {
        best_val = val_loss;
        best = model.parameters();
        report.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
      if (config.patience == 0) break;
    }
    model.parameters().assign_values(best);
  }

  const EvaluationResult test = evaluate(model, data.test, metric_loss_config(), config.workers);
  report.test_metric = kMetricScale * test.loss;
  report.test_bins = test.bins;
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace tgnn4i
