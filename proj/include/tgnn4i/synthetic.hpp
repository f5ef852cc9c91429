#pragma once

#include <cstdint>

#include "tgnn4i/dataset.hpp"
#include "tgnn4i/graph.hpp"
#include "tgnn4i/sequence.hpp"

namespace tgnn4i {

/// Periodic signals propagating along a random Delaunay DAG:
///   s^n(t) = sin(phi^n t + eta^n) + (0.5 / |N(n)|) sum_{m in N(n)} s^m(t - lag)
/// with s = 0 before time 0, on the grid t = k / grid.
struct SyntheticConfig {
  std::uint64_t seed = 0;
  Index num_nodes = 20;
  Index train = 100;
  Index val = 50;
  Index test = 50;
  Index times_per_sequence = 70;
  Index grid = 1000;
  double obs_fraction = 0.5;
  double lag = 0.05;
  double noise_std = 0.01;
  double freq_low = 20.0;
  double freq_high = 100.0;

  Index num_sequences() const { return train + val + test; }
  /// Lag in whole grid steps; throws unless lag * grid is an integer.
  Index lag_steps() const;
  void validate() const;
  std::string to_json() const;
};

struct SyntheticDataset {
  DatasetSplit split;
  Points2 points;
  std::vector<Index> order;        // node ranking that orients the DAG
  Eigen::VectorXd frequencies;     // phi^n, shared by all sequences
};

/// Clean signal on grid times k / grid, k = 0..grid (rows), one column per node.
Eigen::MatrixXd synthetic_clean_signal(const GraphTopology& graph, const Eigen::VectorXd& frequencies,
                                       const Eigen::VectorXd& phases, Index grid, Index lag_steps);

SyntheticDataset generate_synthetic(const SyntheticConfig& config);

}  // namespace tgnn4i
