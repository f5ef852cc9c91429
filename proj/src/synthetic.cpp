#include "tgnn4i/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include "json.hpp"
#include <numbers>
#include <numeric>

namespace tgnn4i {

namespace {

constexpr int kGraphAttempts = 100;

}  // namespace

Index SyntheticConfig::lag_steps() const {
  const double steps = lag * static_cast<double>(grid);
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 || rounded < 0) throw DataError("synthetic: lag must be a whole number of grid steps");
  return static_cast<Index>(rounded);
}

void SyntheticConfig::validate() const {
  if (num_nodes < 3) throw DataError("synthetic: need at least 3 nodes");
  if (train < 1 || val < 1 || test < 1) throw DataError("synthetic: every split needs a sequence");
  if (grid < 1) throw DataError("synthetic: grid must be positive");
  if (times_per_sequence < 1 || times_per_sequence > grid)
    throw DataError("synthetic: times per sequence must lie in [1, grid]");
  if (!(obs_fraction > 0.0 && obs_fraction <= 1.0)) throw DataError("synthetic: observation fraction must lie in (0, 1]");
  if (!(noise_std >= 0.0)) throw DataError("synthetic: noise std must be non-negative");
  if (!(freq_low <= freq_high)) throw DataError("synthetic: frequency range is empty");
  lag_steps();
}

std::string SyntheticConfig::to_json() const {
  nlohmann::ordered_json j = {{"num_nodes", num_nodes},   {"train", train},
                              {"val", val},               {"test", test},
                              {"times_per_sequence", times_per_sequence},
                              {"grid", grid},             {"obs_fraction", obs_fraction},
                              {"lag", lag},               {"noise_std", noise_std},
                              {"freq_low", freq_low},     {"freq_high", freq_high}};
  return j.dump();
}

Eigen::MatrixXd synthetic_clean_signal(const GraphTopology& graph, const Eigen::VectorXd& frequencies,
                                       const Eigen::VectorXd& phases, Index grid, Index lag_steps) {
  const Index nodes = graph.num_nodes();
  if (frequencies.size() != nodes || phases.size() != nodes) throw DataError("synthetic: one frequency and phase per node");
  const auto order = topological_order(graph);
  Eigen::MatrixXd s(grid + 1, nodes);
  for (Index k = 0; k <= grid; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(grid);
    for (Index n : order) {
      double parents = 0.0;
      const auto nb = graph.in_neighbors(n);
      if (!nb.empty() && k >= lag_steps) {
        for (const auto& m : nb) parents += s(k - lag_steps, m.source);
        parents *= 0.5 / static_cast<double>(nb.size());
      }
      s(k, n) = std::sin(frequencies(n) * t + phases(n)) + parents;
    }
  }
  return s;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const Index nodes = config.num_nodes, grid = config.grid, lag = config.lag_steps();
  SyntheticDataset out;

  auto graph_rng = stream_rng(config.seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GraphTopology graph;
  for (int attempt = 0;; ++attempt) {
    Points2 points(nodes, 2);
    for (Index n = 0; n < nodes; ++n) {
      points(n, 0) = unit(graph_rng);
      points(n, 1) = unit(graph_rng);
    }
    std::vector<Index> order(static_cast<std::size_t>(nodes));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), graph_rng);
    try {
      graph = build_delaunay_dag(points, order);
    } catch (const GraphError&) {
      if (attempt + 1 >= kGraphAttempts) throw DataError("synthetic: no valid point set after repeated sampling");
      continue;
    }
    out.points = points;
    out.order = order;
    break;
  }

  auto freq_rng = stream_rng(config.seed, 1);
  std::uniform_real_distribution<double> freq(config.freq_low, config.freq_high);
  out.frequencies.resize(nodes);
  for (Index n = 0; n < nodes; ++n) out.frequencies(n) = freq(freq_rng);

  std::vector<ObservationSequence> sequences;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (Index i = 0; i < config.num_sequences(); ++i) {
    auto rng = stream_rng(config.seed, 2 + static_cast<std::uint64_t>(i));
    Eigen::VectorXd phases(nodes);
    for (Index n = 0; n < nodes; ++n) phases(n) = phase(rng);
    const Eigen::MatrixXd clean = synthetic_clean_signal(graph, out.frequencies, phases, grid, lag);
    std::normal_distribution<double> noise(0.0, config.noise_std);
    Eigen::VectorXd times(grid);
    for (Index k = 1; k <= grid; ++k) times(k - 1) = static_cast<double>(k) / static_cast<double>(grid);
    ObservationSequence full(times, nodes, 1, 0);
    full.mask.setConstant(true);
    for (Index k = 1; k <= grid; ++k) {
      auto& y = full.values[static_cast<std::size_t>(k - 1)];
      for (Index n = 0; n < nodes; ++n) y(n, 0) = clean(k, n) + noise(rng);
    }
    sequences.push_back(irregularize(full, config.times_per_sequence, config.obs_fraction, rng));
  }

  DatasetSplit& split = out.split;
  split.graph = graph;
  split.value_dim = 1;
  split.feature_dim = 0;
  for (Index i = 0; i < config.num_sequences(); ++i) {
    auto& part = i < config.train ? split.train : (i < config.train + config.val ? split.val : split.test);
    part.push_back(std::move(sequences[static_cast<std::size_t>(i)]));
  }
  split.validate();
  return out;
}

}  // namespace tgnn4i
