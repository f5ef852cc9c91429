#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// Every value is a 2-D matrix (vectors are n x 1 or 1 x n, scalars 1 x 1).
// Operations append a node to a BasicTape; backward() walks the tape in
// reverse insertion order, which is a valid topological order because a node
// can only reference nodes recorded before it.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tgnn4i::ad {

using Index = Eigen::Index;

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  MatMulTransposed,
  Add,
  Sub,
  Mul,
  ConcatCols,
  ConcatRows,
  SliceCols,
  GatherRows,
  GatherCols,
  ScatterMeanRows,
  SparseMatMul,
  ScaleRows,
  BroadcastRows,
  Reshape,
  Sigmoid,
  Tanh,
  Softplus,
  Exp,
  Sin,
  Cos,
  Relu,
  Negate,
  Scale,
  AddScalar,
  Sum,
  Mean,
  Square,
};

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::MatMulTransposed: return "matmul-transposed";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "elementwise-mul";
    case Op::ConcatCols: return "concat-cols";
    case Op::ConcatRows: return "concat-rows";
    case Op::SliceCols: return "split";
    case Op::GatherRows: return "gather-rows";
    case Op::GatherCols: return "gather-cols";
    case Op::ScatterMeanRows: return "scatter-mean-rows";
    case Op::SparseMatMul: return "sparse-matmul";
    case Op::ScaleRows: return "scale-rows";
    case Op::BroadcastRows: return "broadcast-rows";
    case Op::Reshape: return "reshape";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Softplus: return "softplus";
    case Op::Exp: return "exp";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Relu: return "relu";
    case Op::Negate: return "negate";
    case Op::Scale: return "scale-by-scalar";
    case Op::AddScalar: return "add-scalar";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::Square: return "square";
  }
  return "unknown";
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string shape_str(Index rows, Index cols) {
  std::ostringstream os;
  os << '[' << rows << 'x' << cols << ']';
  return os.str();
}

[[noreturn]] inline void shape_mismatch(Op op, std::initializer_list<std::pair<Index, Index>> shapes,
                                        std::string_view what = {}) {
  std::ostringstream os;
  os << op_name(op) << ": incompatible shapes";
  for (const auto& [r, c] : shapes) os << ' ' << shape_str(r, c);
  if (!what.empty()) os << " (" << what << ')';
  throw ShapeError(os.str());
}

template <typename Scalar>
Scalar stable_softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  return (x > Scalar(0) ? x : Scalar(0)) + log1p(exp(-(x > Scalar(0) ? x : -x)));
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

// A finite sum implies finite entries (inf and NaN propagate through +).
template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  using std::isfinite;
  return isfinite(m.sum()) || m.allFinite();
}

}  // namespace detail

template <typename Scalar>
class BasicTape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class BasicVar {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicVar() = default;

  BasicTape<Scalar>* tape() const { return tape_; }
  Index id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const { return tape_->value(*this); }
  Matrix grad() const { return tape_->grad(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const { return tape_->requires_grad(*this); }

 private:
  friend class BasicTape<Scalar>;
  BasicVar(BasicTape<Scalar>* tape, Index id) : tape_(tape), id_(id) {}

  BasicTape<Scalar>* tape_ = nullptr;
  Index id_ = -1;
};

struct BackwardOptions {
  // Drop values and gradients of intermediate nodes as soon as they are no
  // longer needed. Leaves and the loss node are kept.
  bool release_intermediates = false;
};

template <typename Scalar>
class BasicTape {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Var = BasicVar<Scalar>;

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;
  BasicTape(BasicTape&&) = default;
  BasicTape& operator=(BasicTape&&) = default;

  /// Leaf that receives a gradient.
  Var variable(Matrix value) { return push_leaf(std::move(value), true); }
  /// Leaf that never receives a gradient.
  Var constant(Matrix value) { return push_leaf(std::move(value), false); }
  Var scalar_constant(Scalar s) { return constant(Matrix::Constant(1, 1, s)); }

  const Matrix& value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  /// d(loss)/d(v) after backward(); zeros when v was not reached.
  Matrix grad(Var v) const {
    const Node& n = node(v);
    if (n.has_grad) return n.grad;
    return Matrix::Zero(n.rows, n.cols);
  }

  std::size_t size() const { return nodes_.size(); }
  Op op(Var v) const { return node(v).op; }

  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

  void backward(Var loss, BackwardOptions options = {});

  // Used by the free-function operators below; not part of the public API.
  struct Node {
    Op op = Op::Leaf;
    bool requires_grad = false;
    bool has_grad = false;
    Index rows = 0;
    Index cols = 0;
    Index a = -1;  // first input
    Index b = -1;  // second input
    Matrix value;
    Matrix grad;
    std::vector<Index> inputs;   // variadic inputs (concat)
    std::vector<Index> indices;  // gather / scatter indices, slice bounds
    Vector coeffs;               // row weights, group sizes
    std::shared_ptr<const Eigen::SparseMatrix<Scalar, Eigen::RowMajor>> sparse;  // constant left factor
    Scalar scalar = Scalar(0);
  };

  Var record(Node n) {
    n.rows = n.value.rows();
    n.cols = n.value.cols();
    if (check_finite_ && !detail::all_finite(n.value)) {
      throw NumericalError(std::string(op_name(n.op)) + ": non-finite value in forward pass");
    }
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<Index>(nodes_.size()) - 1);
  }

  const Node& node(Var v) const {
    if (v.tape() != this || v.id() < 0 || v.id() >= static_cast<Index>(nodes_.size())) {
      throw std::invalid_argument("variable does not belong to this tape");
    }
    return nodes_[static_cast<std::size_t>(v.id())];
  }

  bool needs_grad(Index id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

 private:
  Var push_leaf(Matrix value, bool grad) {
    Node n;
    n.op = Op::Leaf;
    n.requires_grad = grad;
    n.value = std::move(value);
    return record(std::move(n));
  }

  Node& at(Index id) { return nodes_[static_cast<std::size_t>(id)]; }

  Matrix& grad_slot(Index id) {
    Node& n = at(id);
    if (!n.has_grad) {
      n.grad = Matrix::Zero(n.rows, n.cols);
      n.has_grad = true;
    }
    return n.grad;
  }

  template <typename Expr>
  void accumulate(Index id, const Expr& g) {
    Node& n = at(id);
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad.array() += g.array();
    }
  }

  // Gradient for an operand that may have been broadcast from 1 x 1.
  template <typename Expr>
  void accumulate_broadcast(Index id, const Expr& g) {
    Node& n = at(id);
    if (!n.requires_grad) return;
    if (n.rows == 1 && n.cols == 1 && (g.rows() != 1 || g.cols() != 1)) {
      accumulate(id, Matrix::Constant(1, 1, g.sum()));
    } else {
      accumulate(id, g);
    }
  }

  void propagate(Index id);

  std::vector<Node> nodes_;
  bool check_finite_ = true;
};

template <typename Scalar>
void BasicTape<Scalar>::backward(Var loss, BackwardOptions options) {
  const Node& root = node(loss);
  if (root.rows != 1 || root.cols != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + detail::shape_str(root.rows, root.cols));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  if (!root.requires_grad) return;
  at(loss.id()).grad = Matrix::Ones(1, 1);
  at(loss.id()).has_grad = true;

  for (Index id = loss.id(); id >= 0; --id) {
    Node& n = at(id);
    if (!n.has_grad || !n.requires_grad || n.op == Op::Leaf) continue;
    if (check_finite_ && !detail::all_finite(n.grad)) {
      throw NumericalError(std::string(op_name(n.op)) + ": non-finite gradient in backward pass");
    }
    propagate(id);
    if (options.release_intermediates && id != loss.id()) {
      Node& done = at(id);
      done.grad = Matrix();
      done.value = Matrix();
    }
  }
  if (check_finite_) {
    for (const auto& n : nodes_) {
      if (n.op == Op::Leaf && n.has_grad && !detail::all_finite(n.grad)) {
        throw NumericalError("leaf: non-finite gradient in backward pass");
      }
    }
  }
}

template <typename Scalar>
void BasicTape<Scalar>::propagate(Index id) {
  // Copy the upstream gradient handle: accumulate() may touch other nodes but
  // never this one, so a reference into nodes_ stays valid (no push_back here).
  Node& n = at(id);
  const Matrix& g = n.grad;
  const auto value_of = [this](Index i) -> const Matrix& { return at(i).value; };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::MatMul:
      if (needs_grad(n.a)) accumulate(n.a, g * value_of(n.b).transpose());
      if (needs_grad(n.b)) accumulate(n.b, value_of(n.a).transpose() * g);
      break;
    case Op::MatMulTransposed:  // a * b^T
      if (needs_grad(n.a)) accumulate(n.a, g * value_of(n.b));
      if (needs_grad(n.b)) accumulate(n.b, g.transpose() * value_of(n.a));
      break;
    case Op::Add:
      accumulate_broadcast(n.a, g);
      accumulate_broadcast(n.b, g);
      break;
    case Op::Sub:
      accumulate_broadcast(n.a, g);
      if (needs_grad(n.b)) accumulate_broadcast(n.b, Matrix(-g));
      break;
    case Op::Mul: {
      const Matrix& va = value_of(n.a);
      const Matrix& vb = value_of(n.b);
      if (needs_grad(n.a)) {
        if (vb.size() == 1)
          accumulate_broadcast(n.a, Matrix(g * vb(0, 0)));
        else if (va.size() == 1)
          accumulate_broadcast(n.a, Matrix(g.cwiseProduct(vb)));
        else
          accumulate(n.a, g.cwiseProduct(vb));
      }
      if (needs_grad(n.b)) {
        if (va.size() == 1)
          accumulate_broadcast(n.b, Matrix(g * va(0, 0)));
        else if (vb.size() == 1)
          accumulate_broadcast(n.b, Matrix(g.cwiseProduct(va)));
        else
          accumulate(n.b, g.cwiseProduct(va));
      }
      break;
    }
    case Op::ConcatCols: {
      Index offset = 0;
      for (Index in : n.inputs) {
        const Index c = at(in).cols;
        if (needs_grad(in)) accumulate(in, g.middleCols(offset, c));
        offset += c;
      }
      break;
    }
    case Op::ConcatRows: {
      Index offset = 0;
      for (Index in : n.inputs) {
        const Index r = at(in).rows;
        if (needs_grad(in)) accumulate(in, g.middleRows(offset, r));
        offset += r;
      }
      break;
    }
    case Op::SliceCols:
      if (needs_grad(n.a)) grad_slot(n.a).middleCols(n.indices[0], n.indices[1]) += g;
      break;
    case Op::GatherRows:
      if (needs_grad(n.a)) {
        Matrix& ga = grad_slot(n.a);
        for (std::size_t k = 0; k < n.indices.size(); ++k) ga.row(n.indices[k]) += g.row(static_cast<Index>(k));
      }
      break;
    case Op::GatherCols:
      if (needs_grad(n.a)) {
        Matrix& ga = grad_slot(n.a);
        for (std::size_t k = 0; k < n.indices.size(); ++k) ga.col(n.indices[k]) += g.col(static_cast<Index>(k));
      }
      break;
    case Op::ScatterMeanRows:
      if (needs_grad(n.a)) {
        Matrix& ga = grad_slot(n.a);
        for (std::size_t k = 0; k < n.indices.size(); ++k) {
          const Index t = n.indices[k];
          ga.row(static_cast<Index>(k)) += g.row(t) / n.coeffs(t);
        }
      }
      break;
    case Op::SparseMatMul:
      if (needs_grad(n.a)) accumulate(n.a, Matrix(n.sparse->transpose() * g));
      break;
    case Op::ScaleRows:
      if (needs_grad(n.a)) accumulate(n.a, n.coeffs.asDiagonal() * g);
      break;
    case Op::BroadcastRows:
      if (needs_grad(n.a)) accumulate(n.a, g.colwise().sum());
      break;
    case Op::Reshape:
      if (needs_grad(n.a)) {
        const Node& in = at(n.a);
        Matrix r(in.rows, in.cols);
        Index k = 0;
        for (Index i = 0; i < g.rows(); ++i)
          for (Index j = 0; j < g.cols(); ++j, ++k) r(k / in.cols, k % in.cols) = g(i, j);
        accumulate(n.a, r);
      }
      break;
    case Op::Sigmoid:
      accumulate(n.a, g.array() * n.value.array() * (Scalar(1) - n.value.array()));
      break;
    case Op::Tanh:
      accumulate(n.a, g.array() * (Scalar(1) - n.value.array().square()));
      break;
    case Op::Softplus:
      accumulate(n.a, g.array() * value_of(n.a).array().unaryExpr([](Scalar x) { return detail::stable_sigmoid(x); }));
      break;
    case Op::Exp:
      accumulate(n.a, g.array() * n.value.array());
      break;
    case Op::Sin:
      accumulate(n.a, g.array() * value_of(n.a).array().cos());
      break;
    case Op::Cos:
      accumulate(n.a, -(g.array() * value_of(n.a).array().sin()));
      break;
    case Op::Relu:
      accumulate(n.a, (value_of(n.a).array() > Scalar(0)).select(g.array(), Scalar(0)));
      break;
    case Op::Negate:
      accumulate(n.a, -g);
      break;
    case Op::Scale:
      accumulate(n.a, g * n.scalar);
      break;
    case Op::AddScalar:
      accumulate(n.a, g);
      break;
    case Op::Sum:
      accumulate(n.a, Matrix::Constant(at(n.a).rows, at(n.a).cols, g(0, 0)));
      break;
    case Op::Mean: {
      const Node& in = at(n.a);
      accumulate(n.a, Matrix::Constant(in.rows, in.cols, g(0, 0) / static_cast<Scalar>(in.rows * in.cols)));
      break;
    }
    case Op::Square:
      accumulate(n.a, Scalar(2) * g.cwiseProduct(value_of(n.a)));
      break;
  }
}

// ---------------------------------------------------------------------------
// Operators. All of them require inputs from the same tape.

namespace detail {

template <typename Scalar>
BasicTape<Scalar>& same_tape(Op op, const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw std::invalid_argument(std::string(op_name(op)) + ": operands live on different tapes");
  }
  return *a.tape();
}

template <typename Scalar>
BasicTape<Scalar>& tape_of(Op op, const BasicVar<Scalar>& a) {
  if (!a.valid()) throw std::invalid_argument(std::string(op_name(op)) + ": invalid operand");
  return *a.tape();
}

template <typename Scalar>
typename BasicTape<Scalar>::Node unary_node(Op op, const BasicVar<Scalar>& a,
                                            typename BasicTape<Scalar>::Matrix value) {
  typename BasicTape<Scalar>::Node n;
  n.op = op;
  n.a = a.id();
  n.requires_grad = a.requires_grad();
  n.value = std::move(value);
  return n;
}

template <typename Scalar>
typename BasicTape<Scalar>::Node binary_node(Op op, const BasicVar<Scalar>& a, const BasicVar<Scalar>& b,
                                             typename BasicTape<Scalar>::Matrix value) {
  typename BasicTape<Scalar>::Node n;
  n.op = op;
  n.a = a.id();
  n.b = b.id();
  n.requires_grad = a.requires_grad() || b.requires_grad();
  n.value = std::move(value);
  return n;
}

// Elementwise binary op with scalar-by-tensor broadcasting only.
template <typename Scalar, typename F>
BasicVar<Scalar> elementwise(Op op, const BasicVar<Scalar>& a, const BasicVar<Scalar>& b, F f) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = same_tape(op, a, b);
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  Matrix out;
  if (va.rows() == vb.rows() && va.cols() == vb.cols()) {
    out = f(va.array(), vb.array()).matrix();
  } else if (vb.size() == 1) {
    out = f(va.array(), Matrix::Constant(va.rows(), va.cols(), vb(0, 0)).array()).matrix();
  } else if (va.size() == 1) {
    out = f(Matrix::Constant(vb.rows(), vb.cols(), va(0, 0)).array(), vb.array()).matrix();
  } else {
    shape_mismatch(op, {{va.rows(), va.cols()}, {vb.rows(), vb.cols()}});
  }
  return tape.record(binary_node(op, a, b, std::move(out)));
}

}  // namespace detail

template <typename Scalar>
BasicVar<Scalar> matmul(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  auto& tape = detail::same_tape(Op::MatMul, a, b);
  if (a.cols() != b.rows()) detail::shape_mismatch(Op::MatMul, {{a.rows(), a.cols()}, {b.rows(), b.cols()}});
  return tape.record(detail::binary_node(Op::MatMul, a, b, a.value() * b.value()));
}

/// a * b^T. Weight matrices are stored (out x in) and applied to row-major
/// feature blocks (rows x in), so this is the workhorse of every layer.
template <typename Scalar>
BasicVar<Scalar> matmul_transposed(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  auto& tape = detail::same_tape(Op::MatMulTransposed, a, b);
  if (a.cols() != b.cols())
    detail::shape_mismatch(Op::MatMulTransposed, {{a.rows(), a.cols()}, {b.rows(), b.cols()}});
  return tape.record(detail::binary_node(Op::MatMulTransposed, a, b, a.value() * b.value().transpose()));
}

template <typename Scalar>
BasicVar<Scalar> add(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  return detail::elementwise(Op::Add, a, b, [](const auto& x, const auto& y) { return x + y; });
}

template <typename Scalar>
BasicVar<Scalar> sub(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  return detail::elementwise(Op::Sub, a, b, [](const auto& x, const auto& y) { return x - y; });
}

template <typename Scalar>
BasicVar<Scalar> mul(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
  return detail::elementwise(Op::Mul, a, b, [](const auto& x, const auto& y) { return x * y; });
}

template <typename Scalar>
BasicVar<Scalar> operator+(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) { return add(a, b); }
template <typename Scalar>
BasicVar<Scalar> operator-(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) { return sub(a, b); }

template <typename Scalar>
BasicVar<Scalar> concat_cols(std::span<const BasicVar<Scalar>> parts) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  if (parts.empty()) throw ShapeError("concat-cols: no operands");
  auto& tape = detail::tape_of(Op::ConcatCols, parts.front());
  const Index rows = parts.front().rows();
  Index cols = 0;
  typename BasicTape<Scalar>::Node n;
  n.op = Op::ConcatCols;
  for (const auto& p : parts) {
    detail::same_tape(Op::ConcatCols, parts.front(), p);
    if (p.rows() != rows) detail::shape_mismatch(Op::ConcatCols, {{rows, parts.front().cols()}, {p.rows(), p.cols()}});
    cols += p.cols();
    n.inputs.push_back(p.id());
    n.requires_grad = n.requires_grad || p.requires_grad();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  n.value = std::move(out);
  return tape.record(std::move(n));
}

template <typename Scalar>
BasicVar<Scalar> concat_cols(std::initializer_list<BasicVar<Scalar>> parts) {
  return concat_cols(std::span<const BasicVar<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
BasicVar<Scalar> concat_rows(std::span<const BasicVar<Scalar>> parts) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  if (parts.empty()) throw ShapeError("concat-rows: no operands");
  auto& tape = detail::tape_of(Op::ConcatRows, parts.front());
  const Index cols = parts.front().cols();
  Index rows = 0;
  typename BasicTape<Scalar>::Node n;
  n.op = Op::ConcatRows;
  for (const auto& p : parts) {
    detail::same_tape(Op::ConcatRows, parts.front(), p);
    if (p.cols() != cols) detail::shape_mismatch(Op::ConcatRows, {{parts.front().rows(), cols}, {p.rows(), p.cols()}});
    rows += p.rows();
    n.inputs.push_back(p.id());
    n.requires_grad = n.requires_grad || p.requires_grad();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  n.value = std::move(out);
  return tape.record(std::move(n));
}

template <typename Scalar>
BasicVar<Scalar> concat_rows(std::initializer_list<BasicVar<Scalar>> parts) {
  return concat_rows(std::span<const BasicVar<Scalar>>(parts.begin(), parts.size()));
}

/// Columns [begin, begin + count).
template <typename Scalar>
BasicVar<Scalar> slice_cols(const BasicVar<Scalar>& a, Index begin, Index count) {
  auto& tape = detail::tape_of(Op::SliceCols, a);
  if (begin < 0 || count < 0 || begin + count > a.cols())
    detail::shape_mismatch(Op::SliceCols, {{a.rows(), a.cols()}}, "column range out of bounds");
  auto n = detail::unary_node(Op::SliceCols, a, a.value().middleCols(begin, count));
  n.indices = {begin, count};
  return tape.record(std::move(n));
}

/// Splits the columns into `parts` equally sized chunks.
template <typename Scalar>
std::vector<BasicVar<Scalar>> split_cols(const BasicVar<Scalar>& a, Index parts) {
  if (parts <= 0 || a.cols() % parts != 0)
    detail::shape_mismatch(Op::SliceCols, {{a.rows(), a.cols()}}, "columns not divisible into equal chunks");
  const Index width = a.cols() / parts;
  std::vector<BasicVar<Scalar>> out;
  out.reserve(static_cast<std::size_t>(parts));
  for (Index k = 0; k < parts; ++k) out.push_back(slice_cols(a, k * width, width));
  return out;
}

template <typename Scalar>
BasicVar<Scalar> gather_rows(const BasicVar<Scalar>& a, std::span<const Index> rows) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = detail::tape_of(Op::GatherRows, a);
  const Matrix& va = a.value();
  Matrix out(static_cast<Index>(rows.size()), va.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= va.rows())
      detail::shape_mismatch(Op::GatherRows, {{va.rows(), va.cols()}}, "row index out of range");
    out.row(static_cast<Index>(k)) = va.row(rows[k]);
  }
  auto n = detail::unary_node(Op::GatherRows, a, std::move(out));
  n.indices.assign(rows.begin(), rows.end());
  return tape.record(std::move(n));
}

template <typename Scalar>
BasicVar<Scalar> gather_cols(const BasicVar<Scalar>& a, std::span<const Index> cols) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = detail::tape_of(Op::GatherCols, a);
  const Matrix& va = a.value();
  Matrix out(va.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] < 0 || cols[k] >= va.cols())
      detail::shape_mismatch(Op::GatherCols, {{va.rows(), va.cols()}}, "column index out of range");
    out.col(static_cast<Index>(k)) = va.col(cols[k]);
  }
  auto n = detail::unary_node(Op::GatherCols, a, std::move(out));
  n.indices.assign(cols.begin(), cols.end());
  return tape.record(std::move(n));
}

/// out.row(t) = sum_{k : targets[k] == t} a.row(k) / group_sizes(t).
/// The divisor is supplied by the caller rather than counted, so a group may
/// be normalised by its structural size even when some members are absent.
template <typename Scalar>
BasicVar<Scalar> scatter_mean_rows(const BasicVar<Scalar>& a, std::span<const Index> targets,
                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& group_sizes) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = detail::tape_of(Op::ScatterMeanRows, a);
  const Matrix& va = a.value();
  if (static_cast<Index>(targets.size()) != va.rows())
    detail::shape_mismatch(Op::ScatterMeanRows, {{va.rows(), va.cols()}, {static_cast<Index>(targets.size()), 1}},
                           "one target per input row required");
  Matrix out = Matrix::Zero(group_sizes.size(), va.cols());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Index t = targets[k];
    if (t < 0 || t >= group_sizes.size())
      detail::shape_mismatch(Op::ScatterMeanRows, {{va.rows(), va.cols()}}, "target index out of range");
    if (!(group_sizes(t) > Scalar(0)))
      detail::shape_mismatch(Op::ScatterMeanRows, {{va.rows(), va.cols()}}, "non-positive group size for a used target");
    out.row(t) += va.row(static_cast<Index>(k)) / group_sizes(t);
  }
  auto n = detail::unary_node(Op::ScatterMeanRows, a, std::move(out));
  n.indices.assign(targets.begin(), targets.end());
  n.coeffs = group_sizes;
  return tape.record(std::move(n));
}

/// out = S * a for a constant sparse S shared with the caller.
template <typename Scalar>
BasicVar<Scalar> sparse_matmul(std::shared_ptr<const Eigen::SparseMatrix<Scalar, Eigen::RowMajor>> s,
                               const BasicVar<Scalar>& a) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = detail::tape_of(Op::SparseMatMul, a);
  if (!s || s->cols() != a.rows())
    detail::shape_mismatch(Op::SparseMatMul, {{s ? s->rows() : 0, s ? s->cols() : 0}, {a.rows(), a.cols()}});
  auto n = detail::unary_node(Op::SparseMatMul, a, Matrix(*s * a.value()));
  n.sparse = std::move(s);
  return tape.record(std::move(n));
}

/// out.row(k) = weights(k) * a.row(k); weights are constants.
template <typename Scalar>
BasicVar<Scalar> scale_rows(const BasicVar<Scalar>& a, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  auto& tape = detail::tape_of(Op::ScaleRows, a);
  if (weights.size() != a.rows())
    detail::shape_mismatch(Op::ScaleRows, {{a.rows(), a.cols()}, {weights.size(), 1}});
  auto n = detail::unary_node(Op::ScaleRows, a, weights.asDiagonal() * a.value());
  n.coeffs = weights;
  return tape.record(std::move(n));
}

/// Repeats a 1 x d row `rows` times.
template <typename Scalar>
BasicVar<Scalar> broadcast_rows(const BasicVar<Scalar>& a, Index rows) {
  auto& tape = detail::tape_of(Op::BroadcastRows, a);
  if (a.rows() != 1) detail::shape_mismatch(Op::BroadcastRows, {{a.rows(), a.cols()}}, "expected a single row");
  return tape.record(detail::unary_node(Op::BroadcastRows, a, a.value().replicate(rows, 1)));
}

/// Row-major reshape.
template <typename Scalar>
BasicVar<Scalar> reshape(const BasicVar<Scalar>& a, Index rows, Index cols) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = detail::tape_of(Op::Reshape, a);
  const Matrix& va = a.value();
  if (rows * cols != va.size()) detail::shape_mismatch(Op::Reshape, {{va.rows(), va.cols()}, {rows, cols}});
  Matrix out(rows, cols);
  Index k = 0;
  for (Index i = 0; i < va.rows(); ++i)
    for (Index j = 0; j < va.cols(); ++j, ++k) out(k / cols, k % cols) = va(i, j);
  return tape.record(detail::unary_node(Op::Reshape, a, std::move(out)));
}

#define TGNN4I_AD_UNARY(fn, op, expr)                                       \
  template <typename Scalar>                                               \
  BasicVar<Scalar> fn(const BasicVar<Scalar>& a) {                         \
    auto& tape = detail::tape_of(op, a);                                   \
    const auto x = a.value().array();                                      \
    return tape.record(detail::unary_node(op, a, (expr).matrix()));        \
  }

TGNN4I_AD_UNARY(sigmoid, Op::Sigmoid, x.unaryExpr([](Scalar v) { return detail::stable_sigmoid(v); }))
TGNN4I_AD_UNARY(tanh, Op::Tanh, x.tanh())
TGNN4I_AD_UNARY(softplus, Op::Softplus, x.unaryExpr([](Scalar v) { return detail::stable_softplus(v); }))
TGNN4I_AD_UNARY(exp, Op::Exp, x.exp())
TGNN4I_AD_UNARY(sin, Op::Sin, x.sin())
TGNN4I_AD_UNARY(cos, Op::Cos, x.cos())
TGNN4I_AD_UNARY(relu, Op::Relu, x.max(Scalar(0)))
TGNN4I_AD_UNARY(negate, Op::Negate, -x)
TGNN4I_AD_UNARY(square, Op::Square, x.square())

#undef TGNN4I_AD_UNARY

template <typename Scalar>
BasicVar<Scalar> operator-(const BasicVar<Scalar>& a) { return negate(a); }

template <typename Scalar>
BasicVar<Scalar> scale(const BasicVar<Scalar>& a, Scalar s) {
  auto& tape = detail::tape_of(Op::Scale, a);
  auto n = detail::unary_node(Op::Scale, a, a.value() * s);
  n.scalar = s;
  return tape.record(std::move(n));
}

template <typename Scalar>
BasicVar<Scalar> operator*(Scalar s, const BasicVar<Scalar>& a) { return scale(a, s); }

template <typename Scalar>
BasicVar<Scalar> add_scalar(const BasicVar<Scalar>& a, Scalar s) {
  auto& tape = detail::tape_of(Op::AddScalar, a);
  auto n = detail::unary_node(Op::AddScalar, a, (a.value().array() + s).matrix());
  n.scalar = s;
  return tape.record(std::move(n));
}

template <typename Scalar>
BasicVar<Scalar> sum(const BasicVar<Scalar>& a) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = detail::tape_of(Op::Sum, a);
  return tape.record(detail::unary_node(Op::Sum, a, Matrix::Constant(1, 1, a.value().sum())));
}

template <typename Scalar>
BasicVar<Scalar> mean(const BasicVar<Scalar>& a) {
  using Matrix = typename BasicTape<Scalar>::Matrix;
  auto& tape = detail::tape_of(Op::Mean, a);
  if (a.value().size() == 0) detail::shape_mismatch(Op::Mean, {{a.rows(), a.cols()}}, "empty operand");
  return tape.record(detail::unary_node(Op::Mean, a, Matrix::Constant(1, 1, a.value().mean())));
}

// ---------------------------------------------------------------------------

using Tape = BasicTape<double>;
using Var = BasicVar<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace tgnn4i::ad
