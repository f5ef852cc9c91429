#include "tgnn4i/message_passing.hpp"

#include <cmath>
#include <stdexcept>

namespace tgnn4i {

AggregationPlan AggregationPlan::from_graph(const GraphTopology& graph, Index copies) {
  if (copies < 1) throw std::invalid_argument("aggregation plan needs at least one copy");
  const Index n = graph.num_nodes();
  AggregationPlan plan;
  plan.num_nodes = n * copies;
  const std::size_t e = graph.edges().size();
  plan.sources.reserve(e * static_cast<std::size_t>(copies));
  plan.targets.reserve(e * static_cast<std::size_t>(copies));
  plan.weights.resize(static_cast<Index>(e) * copies);
  plan.group_sizes.resize(n * copies);
  Index k = 0;
  for (Index r = 0; r < copies; ++r) {
    for (const auto& edge : graph.edges()) {
      plan.sources.push_back(r * n + edge.source);
      plan.targets.push_back(r * n + edge.target);
      plan.weights(k++) = edge.weight;
    }
    for (Index v = 0; v < n; ++v) plan.group_sizes(r * n + v) = static_cast<double>(graph.in_degree(v));
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(plan.sources.size());
  for (std::size_t i = 0; i < plan.sources.size(); ++i) {
    const Index t = plan.targets[i];
    entries.emplace_back(t, plan.sources[i], plan.weights(static_cast<Index>(i)) / plan.group_sizes(t));
  }
  auto op = std::make_shared<Eigen::SparseMatrix<double, Eigen::RowMajor>>(plan.num_nodes, plan.num_nodes);
  op->setFromTriplets(entries.begin(), entries.end());
  plan.mean_operator = std::move(op);
  return plan;
}

ad::Var aggregate_neighbors(const ad::Var& x, const AggregationPlan& plan) {
  if (x.rows() != plan.num_nodes) {
    throw ad::ShapeError("aggregate: feature rows " + std::to_string(x.rows()) + " do not match node count " +
                         std::to_string(plan.num_nodes));
  }
  if (!plan.has_edges()) return x.tape()->constant(Eigen::MatrixXd::Zero(x.rows(), x.cols()));
  return sparse_matmul(plan.mean_operator, x);
}

Eigen::MatrixXd uniform_init(Index rows, Index cols, Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

GnnLayer::GnnLayer(ParameterStore& store, const std::string& name, Index in_dim, Index out_dim,
                   std::mt19937_64& rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
  self_ = store.add(name + ".w_self", uniform_init(out_dim, in_dim, in_dim, rng));
  neigh_ = store.add(name + ".w_neigh", uniform_init(out_dim, in_dim, in_dim, rng));
}

ad::Var GnnLayer::apply(const BoundParameters& params, const ad::Var& x, const AggregationPlan& plan) const {
  if (x.cols() != in_dim_) {
    throw ad::ShapeError("gnn layer: expected " + std::to_string(in_dim_) + " input features, got " +
                         std::to_string(x.cols()));
  }
  const ad::Var own = matmul_transposed(x, params[self_]);
  if (!plan.has_edges()) return own;
  // sum_m e_{m,n} W2 x_m / |N(n)| == W2 * aggregate(x)_n
  return own + matmul_transposed(aggregate_neighbors(x, plan), params[neigh_]);
}

DenseLayer::DenseLayer(ParameterStore& store, const std::string& name, Index in_dim, Index out_dim, bool bias,
                       std::mt19937_64& rng)
    : has_bias_(bias), in_dim_(in_dim), out_dim_(out_dim) {
  weight_ = store.add(name + ".weight", uniform_init(out_dim, in_dim, in_dim, rng));
  if (bias) bias_ = store.add(name + ".bias", Eigen::MatrixXd::Zero(1, out_dim));
}

ad::Var DenseLayer::apply(const BoundParameters& params, const ad::Var& x) const {
  if (x.cols() != in_dim_) {
    throw ad::ShapeError("dense layer: expected " + std::to_string(in_dim_) + " input features, got " +
                         std::to_string(x.cols()));
  }
  const ad::Var out = matmul_transposed(x, params[weight_]);
  if (!has_bias_) return out;
  return out + broadcast_rows(params[bias_], x.rows());
}

GnnStack::GnnStack(ParameterStore& store, const std::string& name, const std::vector<Index>& widths,
                   Index gnn_layers, std::mt19937_64& rng) {
  if (widths.size() < 2) throw std::invalid_argument("gnn stack needs at least one layer");
  const Index layers = static_cast<Index>(widths.size()) - 1;
  if (gnn_layers < 0 || gnn_layers > layers) throw std::invalid_argument("gnn stack: bad layer split");
  for (Index l = 0; l < layers; ++l) {
    if (l < gnn_layers)
      gnn_.emplace_back(store, name + ".gnn" + std::to_string(l), widths[l], widths[l + 1], rng);
    else
      dense_.emplace_back(store, name + ".fc" + std::to_string(l - gnn_layers), widths[l], widths[l + 1], true, rng);
  }
}

Index GnnStack::in_dim() const { return gnn_.empty() ? dense_.front().in_dim() : gnn_.front().in_dim(); }
Index GnnStack::out_dim() const { return dense_.empty() ? gnn_.back().out_dim() : dense_.back().out_dim(); }

ad::Var GnnStack::apply(const BoundParameters& params, const ad::Var& x, const AggregationPlan& plan) const {
  ad::Var h = x;
  const std::size_t total = gnn_.size() + dense_.size();
  std::size_t l = 0;
  for (const auto& layer : gnn_) {
    h = layer.apply(params, h, plan);
    if (++l < total) h = relu(h);
  }
  for (const auto& layer : dense_) {
    h = layer.apply(params, h);
    if (++l < total) h = relu(h);
  }
  return h;
}

DenseStack::DenseStack(ParameterStore& store, const std::string& name, const std::vector<Index>& widths, bool bias,
                       std::mt19937_64& rng) {
  if (widths.size() < 2) throw std::invalid_argument("dense stack needs at least one layer");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    layers_.emplace_back(store, name + ".fc" + std::to_string(l), widths[l], widths[l + 1], bias, rng);
}

ad::Var DenseStack::apply(const BoundParameters& params, const ad::Var& x) const {
  ad::Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].apply(params, h);
    if (l + 1 < layers_.size()) h = relu(h);
  }
  return h;
}

}  // namespace tgnn4i
