#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "tgnn4i/graph.hpp"

namespace tgnn4i {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

class SequenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One graph time series. Step s (0-based) happens at times(s); mask(s, n)
/// marks node n as observed there. values[s] is |V| x d_y, features[s] is
/// |V| x d_x, and both are zero on unobserved rows.
struct ObservationSequence {
  Eigen::VectorXd times;
  Mask mask;
  std::vector<Eigen::MatrixXd> values;
  std::vector<Eigen::MatrixXd> features;

  ObservationSequence() = default;
  /// Empty (all-unobserved) sequence of the given shape.
  ObservationSequence(Eigen::VectorXd times, Index num_nodes, Index value_dim, Index feature_dim);

  Index num_steps() const { return times.size(); }
  Index num_nodes() const { return mask.cols(); }
  Index value_dim() const { return values.empty() ? 0 : values.front().cols(); }
  Index feature_dim() const { return features.empty() ? 0 : features.front().cols(); }
  Index observed_count(Index step) const { return mask.row(step).count(); }
  Index total_observations() const { return mask.count(); }

  /// Throws SequenceError unless times are strictly increasing, every step
  /// has an observation, shapes agree and unobserved rows are zero.
  void validate() const;

  friend bool operator==(const ObservationSequence& a, const ObservationSequence& b);
};

struct DatasetSplit {
  GraphTopology graph;
  std::vector<ObservationSequence> train;
  std::vector<ObservationSequence> val;
  std::vector<ObservationSequence> test;
  Index value_dim = 1;
  Index feature_dim = 0;

  void validate() const;
};

}  // namespace tgnn4i
