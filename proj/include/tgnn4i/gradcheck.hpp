#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tgnn4i/loss.hpp"
#include "tgnn4i/models.hpp"
#include "tgnn4i/sequence.hpp"

namespace tgnn4i {

/// |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

struct GradcheckGroup {
  std::string name;
  Index entries = 0;
  double max_relative_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double max_relative_error = 0.0;

  bool passed(double rtol) const { return max_relative_error < rtol; }
};

/// Central differences of the mean sequence loss against backward-pass
/// gradients, for every parameter entry.
GradcheckReport gradcheck(Forecaster& model, std::span<const ObservationSequence> sequences, const LossConfig& config,
                          double step = 1e-5);

/// A tiny model plus data: 4 nodes, N_t = 6, d_h = 4, partial masks.
struct TinyInstance {
  GraphTopology graph;
  std::unique_ptr<Forecaster> model;
  std::vector<ObservationSequence> sequences;
  LossConfig loss;  // N_init = 1 so that several sources contribute
};

TinyInstance make_tiny_instance(ModelKind kind, DynamicsKind dynamics, std::uint64_t seed);

/// Outcome of one self-check suite.
struct VerifyResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest observed error
  double tolerance = 0.0;
  std::string detail;
};

/// Closed-form evolve vs RK4 on 100 random draws per non-static kind.
VerifyResult verify_dynamics_oracle(std::uint64_t seed, double tolerance = 1e-6);
/// Truncated loss with N_max >= N_t vs a direct triple sum on 50 sequences.
VerifyResult verify_loss_oracle(std::uint64_t seed, double tolerance = 1e-12);
/// Gradcheck of TGNN4I for every dynamics kind.
VerifyResult verify_gradcheck(std::uint64_t seed, double rtol = 1e-4);

}  // namespace tgnn4i
