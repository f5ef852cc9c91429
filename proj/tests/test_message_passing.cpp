#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "test_util.hpp"
#include "tgnn4i/message_passing.hpp"

namespace tgnn4i {
namespace {

using testing::random_matrix;

GraphTopology sample_graph() {
  return GraphTopology(5, {{0, 1, 0.5}, {2, 1, 2.0}, {3, 1, 1.0}, {1, 4, 0.7}, {0, 4, 1.3}, {4, 2, 0.9}});
}

// out_n = W1 x_n + (1 / |N(n)|) sum_{m in N(n)} e_{m,n} W2 x_m, node by node.
Eigen::MatrixXd naive_gnn(const GraphTopology& g, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w_self,
                          const Eigen::MatrixXd& w_neigh) {
  Eigen::MatrixXd out(x.rows(), w_self.rows());
  for (Index n = 0; n < x.rows(); ++n) {
    Eigen::VectorXd v = w_self * x.row(n).transpose();
    const auto nbrs = g.in_neighbors(n);
    for (const auto& nb : nbrs)
      v += nb.weight * (w_neigh * x.row(nb.source).transpose()) / static_cast<double>(nbrs.size());
    out.row(n) = v.transpose();
  }
  return out;
}

TEST(GnnLayer, MatchesNaiveNodeLoop) {
  std::mt19937_64 rng(31);
  const GraphTopology g = sample_graph();
  ParameterStore store;
  const GnnLayer layer(store, "l", 3, 4, rng);
  const Eigen::MatrixXd x = random_matrix(5, 3, rng);
  ad::Tape tape;
  const BoundParameters params(tape, store);
  const Eigen::MatrixXd out = layer.apply(params, tape.constant(x), AggregationPlan::from_graph(g)).value();
  const Eigen::MatrixXd expected =
      naive_gnn(g, x, store[layer.self_weight()].value, store[layer.neighbor_weight()].value);
  EXPECT_LT((out - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GnnLayer, StackedCopiesAreIndependent) {
  std::mt19937_64 rng(32);
  const GraphTopology g = sample_graph();
  ParameterStore store;
  const GnnLayer layer(store, "l", 2, 3, rng);
  const Eigen::MatrixXd x = random_matrix(15, 2, rng);
  ad::Tape tape;
  const BoundParameters params(tape, store);
  const Eigen::MatrixXd out = layer.apply(params, tape.constant(x), AggregationPlan::from_graph(g, 3)).value();
  for (Index r = 0; r < 3; ++r) {
    const Eigen::MatrixXd block = naive_gnn(g, x.middleRows(5 * r, 5), store[layer.self_weight()].value,
                                            store[layer.neighbor_weight()].value);
    EXPECT_LT((out.middleRows(5 * r, 5) - block).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(GnnLayer, PermutationEquivariant) {
  std::mt19937_64 rng(33);
  const GraphTopology g = sample_graph();
  std::vector<Index> perm(5);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  ParameterStore store;
  const GnnStack stack(store, "s", {3, 6, 2}, 2, rng);
  const Eigen::MatrixXd x = random_matrix(5, 3, rng);
  Eigen::MatrixXd px(5, 3);
  for (Index n = 0; n < 5; ++n) px.row(perm[n]) = x.row(n);

  ad::Tape tape;
  const BoundParameters params(tape, store);
  const Eigen::MatrixXd out = stack.apply(params, tape.constant(x), AggregationPlan::from_graph(g)).value();
  const Eigen::MatrixXd pout =
      stack.apply(params, tape.constant(px), AggregationPlan::from_graph(g.permuted(perm))).value();
  for (Index n = 0; n < 5; ++n) EXPECT_LT((pout.row(perm[n]) - out.row(n)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GnnLayer, IsolatedNodesUseOnlyTheSelfTerm) {
  std::mt19937_64 rng(34);
  const GraphTopology g(3, {});
  ParameterStore store;
  const GnnLayer layer(store, "l", 2, 2, rng);
  const Eigen::MatrixXd x = random_matrix(3, 2, rng);
  ad::Tape tape;
  const BoundParameters params(tape, store);
  const Eigen::MatrixXd out = layer.apply(params, tape.constant(x), AggregationPlan::from_graph(g)).value();
  EXPECT_TRUE(out.isApprox(x * store[layer.self_weight()].value.transpose(), 1e-15));
}

TEST(GnnStack, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(35);
  const GraphTopology g = sample_graph();
  const AggregationPlan plan = AggregationPlan::from_graph(g, 2);
  ParameterStore store;
  const GnnStack stack(store, "s", {3, 4, 2}, 1, rng);
  const Eigen::MatrixXd x = random_matrix(10, 3, rng);
  std::vector<Eigen::MatrixXd> inputs = {x};
  for (const auto& e : store.entries()) inputs.push_back(e.value);
  const double err = testing::max_gradient_error(
      [&](ad::Tape& t, const std::vector<ad::Var>& v) {
        // v = {x, w_self, w_neigh, fc weight, fc bias}
        const ad::Var h1 = relu(matmul_transposed(v[0], v[1]) +
                                matmul_transposed(aggregate_neighbors(v[0], plan), v[2]));
        const ad::Var out = matmul_transposed(h1, v[3]) + broadcast_rows(v[4], h1.rows());
        return sum(square(out));
      },
      inputs);
  EXPECT_LT(err, 1e-7);

  // The stack computes the same function as the hand-written composition.
  ad::Tape tape;
  const BoundParameters params(tape, store);
  const ad::Var xv = tape.constant(x);
  const Eigen::MatrixXd via_stack = stack.apply(params, xv, plan).value();
  const Eigen::MatrixXd h1 = (x * store.at(0).value.transpose() +
                              aggregate_neighbors(xv, plan).value() * store.at(1).value.transpose())
                                 .cwiseMax(0.0);
  const Eigen::MatrixXd expected = (h1 * store.at(2).value.transpose()).rowwise() + store.at(3).value.row(0);
  EXPECT_LT((via_stack - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DenseStack, WidthsAndBias) {
  std::mt19937_64 rng(36);
  ParameterStore store;
  const DenseStack with_bias(store, "a", {3, 5, 2}, true, rng);
  const DenseStack without(store, "b", {3, 2}, false, rng);
  EXPECT_EQ(with_bias.in_dim(), 3);
  EXPECT_EQ(with_bias.out_dim(), 2);
  EXPECT_TRUE(with_bias.layers()[0].has_bias());
  EXPECT_FALSE(without.layers()[0].has_bias());
  EXPECT_EQ(store.size(), 5u);
}

TEST(UniformInit, BoundedByInverseSqrtFanIn) {
  std::mt19937_64 rng(37);
  const Eigen::MatrixXd m = uniform_init(50, 16, 16, rng);
  EXPECT_LE(m.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_GT(m.cwiseAbs().maxCoeff(), 0.2);
}

TEST(Aggregate, RejectsWrongRowCount) {
  ad::Tape tape;
  const AggregationPlan plan = AggregationPlan::from_graph(sample_graph());
  EXPECT_THROW(aggregate_neighbors(tape.constant(Eigen::MatrixXd::Zero(4, 2)), plan), ad::ShapeError);
}

}  // namespace
}  // namespace tgnn4i
