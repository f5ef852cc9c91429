#include "tgnn4i/sequence.hpp"

#include <string>

namespace tgnn4i {

ObservationSequence::ObservationSequence(Eigen::VectorXd t, Index num_nodes, Index value_dim, Index feature_dim)
    : times(std::move(t)), mask(Mask::Constant(times.size(), num_nodes, false)) {
  values.assign(static_cast<std::size_t>(times.size()), Eigen::MatrixXd::Zero(num_nodes, value_dim));
  features.assign(static_cast<std::size_t>(times.size()), Eigen::MatrixXd::Zero(num_nodes, feature_dim));
}

void ObservationSequence::validate() const {
  const Index steps = num_steps();
  if (mask.rows() != steps || static_cast<Index>(values.size()) != steps ||
      static_cast<Index>(features.size()) != steps) {
    throw SequenceError("sequence: per-step arrays disagree on the number of steps");
  }
  const Index nodes = num_nodes();
  const Index dy = value_dim(), dx = feature_dim();
  for (Index s = 0; s < steps; ++s) {
    const std::string where = "step " + std::to_string(s);
    if (!std::isfinite(times(s))) throw SequenceError("sequence: non-finite time at " + where);
    if (s > 0 && !(times(s) > times(s - 1))) throw SequenceError("sequence: times not strictly increasing at " + where);
    if (!mask.row(s).any()) throw SequenceError("sequence: no observed node at " + where);
    const auto& y = values[s];
    const auto& x = features[s];
    if (y.rows() != nodes || y.cols() != dy || x.rows() != nodes || x.cols() != dx)
      throw SequenceError("sequence: inconsistent value/feature shape at " + where);
    if (!y.allFinite() || !x.allFinite()) throw SequenceError("sequence: non-finite entry at " + where);
    for (Index n = 0; n < nodes; ++n) {
      if (!mask(s, n) && (!y.row(n).isZero(0.0) || !x.row(n).isZero(0.0))) {
        throw SequenceError("sequence: unobserved node " + std::to_string(n) + " has nonzero data at " + where);
      }
    }
  }
}

bool operator==(const ObservationSequence& a, const ObservationSequence& b) {
  if (a.times.size() != b.times.size() || a.mask.rows() != b.mask.rows() || a.mask.cols() != b.mask.cols())
    return false;
  if (a.times != b.times || !(a.mask == b.mask).all()) return false;
  if (a.values.size() != b.values.size() || a.features.size() != b.features.size()) return false;
  for (std::size_t s = 0; s < a.values.size(); ++s) {
    if (a.values[s].rows() != b.values[s].rows() || a.values[s].cols() != b.values[s].cols()) return false;
    if (a.features[s].rows() != b.features[s].rows() || a.features[s].cols() != b.features[s].cols()) return false;
    if (a.values[s] != b.values[s] || a.features[s] != b.features[s]) return false;
  }
  return true;
}

void DatasetSplit::validate() const {
  for (const auto* part : {&train, &val, &test}) {
    for (const auto& seq : *part) {
      seq.validate();
      if (seq.num_nodes() != graph.num_nodes()) throw SequenceError("dataset: sequence node count differs from graph");
      if (seq.value_dim() != value_dim || seq.feature_dim() != feature_dim)
        throw SequenceError("dataset: sequence dimensions differ from dataset");
    }
  }
}

}  // namespace tgnn4i
