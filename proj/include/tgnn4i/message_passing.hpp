#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tgnn4i/autodiff.hpp"
#include "tgnn4i/graph.hpp"
#include "tgnn4i/parameters.hpp"

namespace tgnn4i {

/// Precomputed edge arrays for neighbour aggregation, optionally for
/// `copies` disjoint replicas of the graph stacked row-wise (replica r owns
/// rows [r * |V|, (r + 1) * |V|)).
struct AggregationPlan {
  Index num_nodes = 0;  // rows of the stacked input
  std::vector<Index> sources;
  std::vector<Index> targets;
  Eigen::VectorXd weights;
  Eigen::VectorXd group_sizes;  // |N(n)| per row, 0 for isolated nodes
  /// Row-normalised adjacency: entry (n, m) = e_{m,n} / |N(n)|.
  std::shared_ptr<const Eigen::SparseMatrix<double, Eigen::RowMajor>> mean_operator;

  static AggregationPlan from_graph(const GraphTopology& graph, Index copies = 1);
  bool has_edges() const { return !sources.empty(); }
};

/// row n = (1/|N(n)|) * sum_{m in N(n)} e_{m,n} x_m; zero for isolated nodes.
ad::Var aggregate_neighbors(const ad::Var& x, const AggregationPlan& plan);

/// Draws entries uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Eigen::MatrixXd uniform_init(Index rows, Index cols, Index fan_in, std::mt19937_64& rng);

/// out_n = W_self x_n + (1/|N(n)|) sum_m e_{m,n} W_neigh x_m.
class GnnLayer {
 public:
  GnnLayer() = default;
  GnnLayer(ParameterStore& store, const std::string& name, Index in_dim, Index out_dim, std::mt19937_64& rng);

  ad::Var apply(const BoundParameters& params, const ad::Var& x, const AggregationPlan& plan) const;

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  ParamId self_weight() const { return self_; }
  ParamId neighbor_weight() const { return neigh_; }

 private:
  ParamId self_;
  ParamId neigh_;
  Index in_dim_ = 0;
  Index out_dim_ = 0;
};

/// Fully connected layer x W^T (+ b).
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(ParameterStore& store, const std::string& name, Index in_dim, Index out_dim, bool bias,
             std::mt19937_64& rng);

  ad::Var apply(const BoundParameters& params, const ad::Var& x) const;

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  bool has_bias() const { return has_bias_; }
  ParamId weight() const { return weight_; }
  ParamId bias() const { return bias_; }

 private:
  ParamId weight_;
  ParamId bias_;
  bool has_bias_ = false;
  Index in_dim_ = 0;
  Index out_dim_ = 0;
};

/// GNN layers followed by fully connected layers, ReLU between all layers
/// and nothing after the last one.
class GnnStack {
 public:
  GnnStack() = default;
  /// `widths` = {in, hidden..., out} over all layers; the first `gnn_layers`
  /// are message passing layers, the remainder dense layers with bias.
  GnnStack(ParameterStore& store, const std::string& name, const std::vector<Index>& widths, Index gnn_layers,
           std::mt19937_64& rng);

  ad::Var apply(const BoundParameters& params, const ad::Var& x, const AggregationPlan& plan) const;

  const std::vector<GnnLayer>& gnn_layers() const { return gnn_; }
  const std::vector<DenseLayer>& dense_layers() const { return dense_; }
  Index in_dim() const;
  Index out_dim() const;

 private:
  std::vector<GnnLayer> gnn_;
  std::vector<DenseLayer> dense_;
};

/// Dense layers only, ReLU in between. Optional bias per stack.
class DenseStack {
 public:
  DenseStack() = default;
  DenseStack(ParameterStore& store, const std::string& name, const std::vector<Index>& widths, bool bias,
             std::mt19937_64& rng);

  ad::Var apply(const BoundParameters& params, const ad::Var& x) const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  Index in_dim() const { return layers_.front().in_dim(); }
  Index out_dim() const { return layers_.back().out_dim(); }

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace tgnn4i
