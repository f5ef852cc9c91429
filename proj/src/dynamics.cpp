#include "tgnn4i/dynamics.hpp"

#include <vector>

namespace tgnn4i {

std::string_view to_string(DynamicsKind kind) {
  switch (kind) {
    case DynamicsKind::Static: return "static";
    case DynamicsKind::Exponential: return "exponential";
    case DynamicsKind::Periodic: return "periodic";
  }
  return "static";
}

DynamicsKind parse_dynamics_kind(std::string_view name) {
  if (name == "static") return DynamicsKind::Static;
  if (name == "exponential") return DynamicsKind::Exponential;
  if (name == "periodic") return DynamicsKind::Periodic;
  throw DynamicsError("unknown dynamics kind '" + std::string(name) + "'");
}

ad::Var evolve(DynamicsKind kind, const ad::Var& params, const ad::Var& jump, const Eigen::VectorXd& deltas) {
  const Index rows = jump.rows();
  const Index dim = jump.cols();
  if (deltas.size() != rows) throw DynamicsError("evolve: one elapsed time per row required");
  if ((deltas.array() < 0.0).any()) throw DynamicsError("evolve: elapsed time must be non-negative");
  if (kind == DynamicsKind::Static) return jump;
  if (params.rows() != rows || params.cols() != dim)
    throw DynamicsError("evolve: dynamics parameters must match the jump value shape");
  if (!(params.value().array() > 0.0).all()) throw DynamicsError("evolve: dynamics parameters must be positive");

  ad::Tape& tape = *jump.tape();
  if (kind == DynamicsKind::Exponential) {
    const ad::Var elapsed = tape.constant(deltas.replicate(1, dim));
    return mul(exp(-mul(elapsed, params)), jump);
  }

  if (dim % 2 != 0) throw DynamicsError("evolve: periodic dynamics need an even latent dimension");
  const Index half = dim / 2;
  std::vector<Index> even(static_cast<std::size_t>(half)), odd(static_cast<std::size_t>(half));
  std::vector<Index> interleave(static_cast<std::size_t>(dim));
  for (Index k = 0; k < half; ++k) {
    even[k] = 2 * k;
    odd[k] = 2 * k + 1;
    interleave[2 * k] = k;
    interleave[2 * k + 1] = half + k;
  }
  const ad::Var elapsed = tape.constant(deltas.replicate(1, half));
  const ad::Var decay = slice_cols(params, 0, half);
  const ad::Var freq = slice_cols(params, half, half);

  // Angles are reduced mod 2 pi through a constant shift, which leaves the
  // derivative untouched.
  const ad::Var raw_angle = mul(elapsed, freq);
  const Eigen::MatrixXd turns =
      (raw_angle.value().array() / (2.0 * std::numbers::pi)).floor() * (2.0 * std::numbers::pi);
  const ad::Var angle = sub(raw_angle, tape.constant(turns));

  const ad::Var factor = exp(-mul(elapsed, decay));
  const ad::Var cs = cos(angle);
  const ad::Var sn = sin(angle);
  const ad::Var x = gather_cols(jump, std::span<const Index>(even));
  const ad::Var y = gather_cols(jump, std::span<const Index>(odd));
  const ad::Var new_x = mul(factor, sub(mul(cs, x), mul(sn, y)));
  const ad::Var new_y = mul(factor, add(mul(sn, x), mul(cs, y)));
  return gather_cols(ad::concat_cols({new_x, new_y}), std::span<const Index>(interleave));
}

}  // namespace tgnn4i
