#include <gtest/gtest.h>

#include <memory>
#include <vector>

#include "test_util.hpp"
#include "tgnn4i/autodiff.hpp"

namespace tgnn4i {
namespace {

using ad::Tape;
using ad::Var;
using testing::max_gradient_error;
using testing::random_matrix;

// Projects a matrix output onto a fixed random direction so every entry of
// the output gradient is exercised.
Var project(Tape& tape, const Var& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum(mul(out, tape.constant(random_matrix(out.rows(), out.cols(), rng))));
}

struct UnaryCase {
  const char* name;
  Var (*fn)(const Var&);
};

class UnaryOpGradient : public ::testing::TestWithParam<UnaryCase> {};

TEST_P(UnaryOpGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  const auto op = GetParam().fn;
  // Keep away from relu's kink.
  Eigen::MatrixXd x = random_matrix(3, 4, rng, -2.0, 2.0);
  x = (x.array().abs() < 0.05).select(0.3, x);
  const double err = max_gradient_error([&](Tape& t, const std::vector<Var>& v) { return project(t, op(v[0]), 5); },
                                        {x});
  EXPECT_LT(err, 1e-7) << GetParam().name;
}

INSTANTIATE_TEST_SUITE_P(
    Ops, UnaryOpGradient,
    ::testing::Values(UnaryCase{"sigmoid", [](const Var& a) { return ad::sigmoid(a); }},
                      UnaryCase{"tanh", [](const Var& a) { return ad::tanh(a); }},
                      UnaryCase{"softplus", [](const Var& a) { return ad::softplus(a); }},
                      UnaryCase{"exp", [](const Var& a) { return ad::exp(a); }},
                      UnaryCase{"sin", [](const Var& a) { return ad::sin(a); }},
                      UnaryCase{"cos", [](const Var& a) { return ad::cos(a); }},
                      UnaryCase{"relu", [](const Var& a) { return ad::relu(a); }},
                      UnaryCase{"negate", [](const Var& a) { return -a; }},
                      UnaryCase{"square", [](const Var& a) { return ad::square(a); }},
                      UnaryCase{"scale", [](const Var& a) { return ad::scale(a, -1.7); }},
                      UnaryCase{"add_scalar", [](const Var& a) { return ad::add_scalar(a, 0.4); }},
                      UnaryCase{"mean", [](const Var& a) { return ad::mean(a); }},
                      UnaryCase{"reshape", [](const Var& a) { return ad::reshape(a, 6, 2); }}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(AutodiffGradient, BinaryOps) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = random_matrix(3, 4, rng), b = random_matrix(3, 4, rng), c = random_matrix(4, 2, rng),
                        d = random_matrix(5, 4, rng);
  using Fn = testing::TapeFunction;
  const std::vector<std::pair<const char*, Fn>> cases = {
      {"add", [](Tape& t, const std::vector<Var>& v) { return project(t, v[0] + v[1], 1); }},
      {"sub", [](Tape& t, const std::vector<Var>& v) { return project(t, v[0] - v[1], 1); }},
      {"mul", [](Tape& t, const std::vector<Var>& v) { return project(t, mul(v[0], v[1]), 1); }},
  };
  for (const auto& [name, fn] : cases) EXPECT_LT(max_gradient_error(fn, {a, b}), 1e-8) << name;

  EXPECT_LT(max_gradient_error([](Tape& t, const std::vector<Var>& v) { return project(t, matmul(v[0], v[1]), 2); },
                               {a, c}),
            1e-8);
  EXPECT_LT(max_gradient_error(
                [](Tape& t, const std::vector<Var>& v) { return project(t, matmul_transposed(v[0], v[1]), 2); },
                {a, d}),
            1e-8);
}

TEST(AutodiffGradient, ScalarBroadcastInElementwiseOps) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd a = random_matrix(3, 2, rng), s = random_matrix(1, 1, rng);
  EXPECT_LT(max_gradient_error([](Tape& t, const std::vector<Var>& v) { return project(t, mul(v[0], v[1]), 9); },
                               {a, s}),
            1e-8);
  EXPECT_LT(max_gradient_error([](Tape& t, const std::vector<Var>& v) { return project(t, v[1] - v[0], 9); },
                               {a, s}),
            1e-8);
}

TEST(AutodiffGradient, StructuralOps) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd a = random_matrix(4, 3, rng), b = random_matrix(4, 2, rng), c = random_matrix(2, 3, rng),
                        row = random_matrix(1, 3, rng);
  EXPECT_LT(max_gradient_error(
                [](Tape& t, const std::vector<Var>& v) { return project(t, ad::concat_cols({v[0], v[1], v[0]}), 3); },
                {a, b}),
            1e-8);
  EXPECT_LT(max_gradient_error(
                [](Tape& t, const std::vector<Var>& v) { return project(t, ad::concat_rows({v[0], v[1]}), 3); },
                {a, c}),
            1e-8);
  EXPECT_LT(max_gradient_error(
                [](Tape& t, const std::vector<Var>& v) { return project(t, slice_cols(v[0], 1, 2), 3); }, {a}),
            1e-8);
  EXPECT_LT(max_gradient_error(
                [](Tape& t, const std::vector<Var>& v) {
                  const auto parts = ad::split_cols(v[0], 3);
                  return project(t, mul(parts[0], parts[2]), 3);
                },
                {a}),
            1e-8);
  EXPECT_LT(max_gradient_error([](Tape& t, const std::vector<Var>& v) { return project(t, broadcast_rows(v[0], 5), 3); },
                               {row}),
            1e-8);

  const std::vector<Eigen::Index> rows = {3, 0, 3, 1, 2, 0};
  EXPECT_LT(max_gradient_error(
                [&](Tape& t, const std::vector<Var>& v) {
                  return project(t, gather_rows(v[0], std::span<const Eigen::Index>(rows)), 3);
                },
                {a}),
            1e-8);
  const std::vector<Eigen::Index> cols = {2, 2, 0};
  EXPECT_LT(max_gradient_error(
                [&](Tape& t, const std::vector<Var>& v) {
                  return project(t, gather_cols(v[0], std::span<const Eigen::Index>(cols)), 3);
                },
                {a}),
            1e-8);

  const std::vector<Eigen::Index> targets = {1, 0, 1, 2};
  const Eigen::VectorXd sizes = Eigen::Vector3d(1.0, 3.0, 0.5);
  EXPECT_LT(max_gradient_error(
                [&](Tape& t, const std::vector<Var>& v) {
                  return project(t, scatter_mean_rows(v[0], std::span<const Eigen::Index>(targets), sizes), 3);
                },
                {a}),
            1e-8);

  const Eigen::VectorXd weights = Eigen::Vector4d(0.5, -2.0, 0.0, 1.5);
  EXPECT_LT(max_gradient_error([&](Tape& t, const std::vector<Var>& v) { return project(t, scale_rows(v[0], weights), 3); },
                               {a}),
            1e-8);
}

TEST(AutodiffGradient, SparseMatmul) {
  std::mt19937_64 rng(6);
  auto s = std::make_shared<Eigen::SparseMatrix<double, Eigen::RowMajor>>(3, 4);
  std::vector<Eigen::Triplet<double>> entries = {{0, 1, 0.5}, {0, 3, -1.0}, {2, 0, 2.0}, {2, 2, 0.25}};
  s->setFromTriplets(entries.begin(), entries.end());
  std::shared_ptr<const Eigen::SparseMatrix<double, Eigen::RowMajor>> op = s;
  const Eigen::MatrixXd a = random_matrix(4, 2, rng);

  Tape tape;
  const Var out = sparse_matmul(op, tape.variable(a));
  EXPECT_TRUE(out.value().isApprox(Eigen::MatrixXd(*s) * a));
  EXPECT_LT(max_gradient_error([&](Tape& t, const std::vector<Var>& v) { return project(t, sparse_matmul(op, v[0]), 8); },
                               {a}),
            1e-8);
}

TEST(AutodiffGradient, SharedSubexpressionsAccumulate) {
  // f(x) = sum(x * x) + sum(tanh(x) * x): x feeds several paths.
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = random_matrix(2, 3, rng);
  Tape tape;
  const Var v = tape.variable(x);
  tape.backward(sum(mul(v, v)) + sum(mul(ad::tanh(v), v)));
  const Eigen::ArrayXXd t = x.array().tanh();
  const Eigen::MatrixXd expected = (2.0 * x.array() + t + x.array() * (1.0 - t.square())).matrix();
  EXPECT_TRUE(v.grad().isApprox(expected, 1e-12));
}

TEST(Autodiff, StableActivationsStayFinite) {
  Tape tape;
  const Var x = tape.variable(Eigen::RowVector3d(-800.0, 0.0, 800.0));
  const Eigen::MatrixXd sp = ad::softplus(x).value();
  const Eigen::MatrixXd sg = ad::sigmoid(x).value();
  EXPECT_DOUBLE_EQ(sp(0, 2), 800.0);
  EXPECT_NEAR(sp(0, 1), std::log(2.0), 1e-15);
  EXPECT_GE(sp(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(sg(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(sg(0, 2), 1.0);
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  Tape tape;
  const Var c = tape.constant(Eigen::MatrixXd::Ones(2, 2));
  const Var x = tape.variable(Eigen::MatrixXd::Ones(2, 2));
  EXPECT_FALSE(c.requires_grad());
  const Var y = mul(c, x);
  EXPECT_TRUE(y.requires_grad());
  tape.backward(sum(y));
  EXPECT_TRUE(c.grad().isZero());
  EXPECT_TRUE(x.grad().isOnes());
}

TEST(Autodiff, ShapeMismatchesThrow) {
  Tape tape;
  const Var a = tape.variable(Eigen::MatrixXd::Zero(2, 3));
  const Var b = tape.variable(Eigen::MatrixXd::Zero(3, 2));
  EXPECT_THROW(add(a, b), ad::ShapeError);
  EXPECT_THROW(matmul(a, a), ad::ShapeError);
  EXPECT_THROW(slice_cols(a, 2, 2), ad::ShapeError);
  EXPECT_THROW(reshape(a, 4, 2), ad::ShapeError);
  EXPECT_THROW(broadcast_rows(b, 2), ad::ShapeError);
}

TEST(Autodiff, BackwardRequiresScalarLoss) {
  Tape tape;
  const Var a = tape.variable(Eigen::MatrixXd::Zero(2, 2));
  EXPECT_ANY_THROW(tape.backward(a));
}

TEST(Autodiff, VariablesFromAnotherTapeAreRejected) {
  Tape t1, t2;
  const Var a = t1.variable(Eigen::MatrixXd::Zero(1, 1));
  const Var b = t2.variable(Eigen::MatrixXd::Zero(1, 1));
  EXPECT_ANY_THROW(add(a, b));
  EXPECT_ANY_THROW(t2.value(a));
}

TEST(Autodiff, NonFiniteForwardValuesAreReported) {
  Tape tape;
  const Var x = tape.variable(Eigen::MatrixXd::Constant(1, 1, 1000.0));
  EXPECT_THROW(ad::exp(x), ad::NumericalError);
  tape.set_check_finite(false);
  EXPECT_NO_THROW(ad::exp(x));
}

TEST(Autodiff, ReleasingIntermediatesKeepsLeafGradients) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd x0 = random_matrix(3, 3, rng);
  Eigen::MatrixXd full, released;
  for (bool release : {false, true}) {
    Tape tape;
    const Var x = tape.variable(x0);
    const Var loss = sum(ad::tanh(matmul(x, x)));
    tape.backward(loss, {.release_intermediates = release});
    (release ? released : full) = x.grad();
    EXPECT_EQ(loss.value().size(), 1);
  }
  EXPECT_EQ(full, released);
}

}  // namespace
}  // namespace tgnn4i
