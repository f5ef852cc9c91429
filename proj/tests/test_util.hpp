#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "tgnn4i/autodiff.hpp"

namespace tgnn4i::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

/// Scalar function of several matrices, built on a fresh tape each call.
using TapeFunction = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

/// Largest |analytic - numeric| / max(1, |numeric|) over every input entry.
inline double max_gradient_error(const TapeFunction& f, const std::vector<Eigen::MatrixXd>& inputs,
                                 double step = 1e-6) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.variable(m));
  tape.backward(f(tape, vars));

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Eigen::MatrixXd analytic = vars[k].grad();
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double shift) {
        std::vector<Eigen::MatrixXd> moved = inputs;
        moved[k].data()[i] += shift;
        ad::Tape t;
        std::vector<ad::Var> v;
        for (const auto& m : moved) v.push_back(t.variable(m));
        return f(t, v).value()(0, 0);
      };
      const double numeric = (eval(step) - eval(-step)) / (2.0 * step);
      worst = std::max(worst, std::abs(analytic.data()[i] - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return worst;
}

}  // namespace tgnn4i::testing
