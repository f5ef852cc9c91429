#include "tgnn4i/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tgnn4i {

WeightFunction WeightFunction::constant() {
  WeightFunction w;
  w.kind = WeightKind::Constant;
  return w;
}

WeightFunction WeightFunction::exponential(double scale) {
  WeightFunction w;
  w.kind = WeightKind::Exponential;
  w.scale = scale;
  return w;
}

WeightFunction WeightFunction::gaussian(double center, double scale) {
  WeightFunction w;
  w.kind = WeightKind::Gaussian;
  w.center = center;
  w.scale = scale;
  return w;
}

WeightFunction WeightFunction::indicator(double lower, double upper) {
  WeightFunction w;
  w.kind = WeightKind::Indicator;
  w.lower = lower;
  w.upper = upper;
  return w;
}

double WeightFunction::operator()(double delta) const {
  switch (kind) {
    case WeightKind::Constant: return 1.0;
    case WeightKind::Exponential: return std::exp(-delta / scale);
    case WeightKind::Gaussian: {
      const double z = (delta - center) / scale;
      return std::exp(-z * z);
    }
    case WeightKind::Indicator: return (delta >= lower && delta <= upper) ? 1.0 : 0.0;
  }
  return 0.0;
}

void WeightFunction::validate() const {
  if ((kind == WeightKind::Exponential || kind == WeightKind::Gaussian) && !(scale > 0.0))
    throw LossError("weight: scale must be positive");
  if (kind == WeightKind::Indicator && !(lower < upper)) throw LossError("weight: indicator needs lower < upper");
}

std::string WeightFunction::describe() const {
  std::ostringstream out;
  switch (kind) {
    case WeightKind::Constant: out << "constant"; break;
    case WeightKind::Exponential: out << "exponential(" << scale << ")"; break;
    case WeightKind::Gaussian: out << "gaussian(" << center << ", " << scale << ")"; break;
    case WeightKind::Indicator: out << "indicator[" << lower << ", " << upper << "]"; break;
  }
  return out.str();
}

WeightFunction weight_preset(std::string_view name) {
  if (name == "w1") return WeightFunction::constant();
  if (name == "w2") return WeightFunction::exponential(0.04);
  if (name == "w3") return WeightFunction::gaussian(0.1, 0.02);
  if (name == "w4") return WeightFunction::indicator(0.18, 0.22);
  throw LossError("unknown weighting '" + std::string(name) + "' (expected w1, w2, w3 or w4)");
}

void LossConfig::validate() const {
  weight.validate();
  if (warmup < 0) throw LossError("loss: warmup must be non-negative");
  if (horizon < 1) throw LossError("loss: horizon must be at least 1");
}

Index supervised_count(const ObservationSequence& seq, const LossConfig& config) {
  Index count = 0;
  for (Index q = config.warmup + 1; q < seq.num_steps(); ++q) count += seq.observed_count(q);
  return count;
}

namespace {

void check_blocks(const PredictionSet& predictions, const ObservationSequence& seq, const LossConfig& config) {
  config.validate();
  if (predictions.num_nodes != seq.num_nodes() || predictions.value_dim != seq.value_dim())
    throw LossError("loss: predictions do not match the sequence shape");
  for (const auto& block : predictions.blocks) {
    if (block.source < config.warmup) throw LossError("loss: prediction from a warm-up step");
    if (block.values.rows() != static_cast<Index>(block.targets.size()) * seq.num_nodes())
      throw LossError("loss: prediction block has the wrong number of rows");
    for (Index j : block.targets) {
      if (j <= block.source || j >= seq.num_steps()) throw LossError("loss: prediction target out of range");
    }
  }
}

}  // namespace

ad::Var sequence_loss(const PredictionSet& predictions, const ObservationSequence& seq, const LossConfig& config) {
  check_blocks(predictions, seq, config);
  const Index n_obs = supervised_count(seq, config);
  if (n_obs == 0) throw LossError("loss: no supervised targets after warm-up");
  if (predictions.empty()) throw LossError("loss: empty prediction set");

  const Index nodes = seq.num_nodes(), dy = seq.value_dim();
  const double norm = 1.0 / (static_cast<double>(n_obs) * static_cast<double>(dy));
  std::vector<ad::Var> terms;
  for (const auto& block : predictions.blocks) {
    const Index k_count = static_cast<Index>(block.targets.size());
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(k_count * nodes, dy);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(k_count * nodes);
    bool any = false;
    for (Index k = 0; k < k_count; ++k) {
      const Index j = block.targets[static_cast<std::size_t>(k)];
      if (j > block.source + config.horizon) continue;
      const double delta = seq.times(j) - seq.times(block.source);
      const double denom = static_cast<double>(std::min(config.horizon, j - config.warmup));
      const double w = config.weight(delta) / denom * norm;
      for (Index n = 0; n < nodes; ++n) {
        if (!seq.mask(j, n)) continue;
        targets.row(k * nodes + n) = seq.values[static_cast<std::size_t>(j)].row(n);
        coeffs(k * nodes + n) = w;
        any = true;
      }
    }
    if (!any) continue;
    const ad::Var diff = block.values - block.values.tape()->constant(targets);
    terms.push_back(sum(scale_rows(square(diff), coeffs)));
  }
  ad::Tape& tape = *predictions.blocks.front().values.tape();
  if (terms.empty()) return tape.scalar_constant(0.0);
  ad::Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return total;
}

double batch_loss(std::span<const double> losses) {
  if (losses.empty()) throw LossError("loss: empty batch");
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

std::vector<PredictionError> prediction_errors(const PredictionSet& predictions, const ObservationSequence& seq,
                                               const LossConfig& config) {
  check_blocks(predictions, seq, config);
  const Index nodes = seq.num_nodes();
  std::vector<PredictionError> out;
  for (const auto& block : predictions.blocks) {
    const auto& values = block.values.value();
    for (std::size_t k = 0; k < block.targets.size(); ++k) {
      const Index j = block.targets[k];
      if (j > block.source + config.horizon) continue;
      for (Index n = 0; n < nodes; ++n) {
        if (!seq.mask(j, n)) continue;
        PredictionError e;
        e.source = block.source;
        e.target = j;
        e.node = n;
        e.delta = seq.times(j) - seq.times(block.source);
        const auto diff = values.row(static_cast<Index>(k) * nodes + n) - seq.values[static_cast<std::size_t>(j)].row(n);
        e.squared_error = diff.squaredNorm() / static_cast<double>(diff.size());
        e.weight = config.weight(e.delta);
        e.denominator = static_cast<double>(std::min(config.horizon, j - config.warmup));
        out.push_back(e);
      }
    }
  }
  return out;
}

}  // namespace tgnn4i
