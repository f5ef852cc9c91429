#pragma once

// Closed-form evolution of the dynamic latent component between observations.
//
// The latent ODE dh/dt = A h has A diagonal (exponential decay, A = -diag(w))
// or block diagonal with 2x2 real Jordan blocks [[a, -b], [b, a]] (periodic).
// Periodic parameter vectors are laid out as
//   [-a_1, -a_3, ..., -a_{d-1}, b_1, b_3, ..., b_{d-1}],
// so dimension pair (2k, 2k+1) uses decay w[k] and frequency w[d/2 + k].

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tgnn4i/autodiff.hpp"

namespace tgnn4i {

using Index = Eigen::Index;

enum class DynamicsKind { Static, Exponential, Periodic };

std::string_view to_string(DynamicsKind kind);
DynamicsKind parse_dynamics_kind(std::string_view name);

class DynamicsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Number of dynamics parameters for a latent width (0 for Static).
inline Index dynamics_param_count(DynamicsKind kind, Index latent_dim) {
  return kind == DynamicsKind::Static ? 0 : latent_dim;
}

template <typename Scalar>
Scalar reduce_angle(Scalar angle) {
  using std::floor;
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  return angle - two_pi * floor(angle / two_pi);
}

template <typename Scalar>
void check_evolve_args(DynamicsKind kind, const VectorX<Scalar>& params, Index dim, Scalar delta_t) {
  if (!(delta_t >= Scalar(0))) throw DynamicsError("evolve: elapsed time must be non-negative");
  if (kind == DynamicsKind::Static) return;
  if (kind == DynamicsKind::Periodic && dim % 2 != 0)
    throw DynamicsError("evolve: periodic dynamics need an even latent dimension");
  if (params.size() != dim)
    throw DynamicsError("evolve: expected " + std::to_string(dim) + " dynamics parameters, got " +
                        std::to_string(params.size()));
  if (!(params.array() > Scalar(0)).all()) throw DynamicsError("evolve: dynamics parameters must be positive");
}

/// h(c, delta) = exp(delta * A) c for the closed-form generators above.
template <typename Scalar>
VectorX<Scalar> evolve(DynamicsKind kind, const VectorX<Scalar>& params, const VectorX<Scalar>& c, Scalar delta_t) {
  using std::cos;
  using std::exp;
  using std::sin;
  check_evolve_args(kind, params, c.size(), delta_t);
  switch (kind) {
    case DynamicsKind::Static:
      return c;
    case DynamicsKind::Exponential:
      return ((-delta_t * params.array()).exp() * c.array()).matrix();
    case DynamicsKind::Periodic: {
      const Index half = c.size() / 2;
      VectorX<Scalar> out(c.size());
      for (Index k = 0; k < half; ++k) {
        const Scalar decay = exp(-delta_t * params(k));
        const Scalar angle = reduce_angle(params(half + k) * delta_t);
        const Scalar cs = cos(angle), sn = sin(angle);
        const Scalar x = c(2 * k), y = c(2 * k + 1);
        out(2 * k) = decay * (cs * x - sn * y);
        out(2 * k + 1) = decay * (sn * x + cs * y);
      }
      return out;
    }
  }
  return c;
}

/// h_bar + evolve(...).
template <typename Scalar>
VectorX<Scalar> full_state(const VectorX<Scalar>& target, DynamicsKind kind, const VectorX<Scalar>& params,
                           const VectorX<Scalar>& c, Scalar delta_t) {
  if (target.size() != c.size()) throw DynamicsError("full_state: target and jump value sizes differ");
  return target + evolve(kind, params, c, delta_t);
}

/// A = -diag(w).
template <typename Scalar>
MatrixX<Scalar> exponential_generator(const VectorX<Scalar>& w) {
  return MatrixX<Scalar>((-w).asDiagonal());
}

/// Block diagonal of C_j = [[a_j, -b_j], [b_j, a_j]] with a_j = -w[k], b_j = w[d/2 + k].
template <typename Scalar>
MatrixX<Scalar> periodic_generator(const VectorX<Scalar>& w) {
  if (w.size() % 2 != 0) throw DynamicsError("periodic generator needs an even dimension");
  const Index half = w.size() / 2;
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(w.size(), w.size());
  for (Index k = 0; k < half; ++k) {
    const Scalar a = -w(k), b = w(half + k);
    A(2 * k, 2 * k) = a;
    A(2 * k, 2 * k + 1) = -b;
    A(2 * k + 1, 2 * k) = b;
    A(2 * k + 1, 2 * k + 1) = a;
  }
  return A;
}

/// Classical RK4 on dh = A h dt from h(0) = c over [0, delta_t]. Test oracle.
template <typename Scalar>
VectorX<Scalar> ode_reference(const MatrixX<Scalar>& A, const VectorX<Scalar>& c, Scalar delta_t, Index steps) {
  if (A.rows() != A.cols() || A.rows() != c.size()) throw DynamicsError("ode_reference: shape mismatch");
  if (steps < 1) throw DynamicsError("ode_reference: need at least one step");
  const Scalar h = delta_t / static_cast<Scalar>(steps);
  VectorX<Scalar> x = c;
  for (Index s = 0; s < steps; ++s) {
    const VectorX<Scalar> k1 = A * x;
    const VectorX<Scalar> k2 = A * (x + h / 2 * k1);
    const VectorX<Scalar> k3 = A * (x + h / 2 * k2);
    const VectorX<Scalar> k4 = A * (x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

/// Row-batched evolve on the tape: row r of `jump` evolves for deltas(r) with
/// the dynamics parameters in row r of `params`. Differentiable in both.
ad::Var evolve(DynamicsKind kind, const ad::Var& params, const ad::Var& jump, const Eigen::VectorXd& deltas);

}  // namespace tgnn4i
