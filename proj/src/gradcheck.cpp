#include "tgnn4i/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tgnn4i/dataset.hpp"
#include "tgnn4i/dynamics.hpp"
#include "tgnn4i/train.hpp"

namespace tgnn4i {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double mean_loss(Forecaster& model, std::span<const ObservationSequence> sequences, const LossConfig& config,
                 double grad_weight) {
  double total = 0.0;
  for (const auto& seq : sequences) total += sequence_objective(model, seq, config, grad_weight);
  return total / static_cast<double>(sequences.size());
}

}  // namespace

GradcheckReport gradcheck(Forecaster& model, std::span<const ObservationSequence> sequences, const LossConfig& config,
                          double step) {
  if (sequences.empty()) throw std::invalid_argument("gradcheck: no sequences");
  ParameterStore& store = model.parameters();
  store.zero_grad();
  mean_loss(model, sequences, config, 1.0 / static_cast<double>(sequences.size()));
  std::vector<Eigen::MatrixXd> analytic;
  for (const auto& e : store.entries()) analytic.push_back(e.grad);

  GradcheckReport report;
  for (std::size_t p = 0; p < store.size(); ++p) {
    GradcheckGroup group{store.at(p).name, store.at(p).value.size(), 0.0};
    for (Index k = 0; k < store.at(p).value.size(); ++k) {
      double& x = store.at(p).value.data()[k];
      const double saved = x;
      x = saved + step;
      const double up = mean_loss(model, sequences, config, 0.0);
      x = saved - step;
      const double down = mean_loss(model, sequences, config, 0.0);
      x = saved;
      const double numeric = (up - down) / (2.0 * step);
      group.max_relative_error =
          std::max(group.max_relative_error, relative_error(analytic[p].data()[k], numeric));
    }
    report.max_relative_error = std::max(report.max_relative_error, group.max_relative_error);
    report.groups.push_back(std::move(group));
  }
  store.zero_grad();
  return report;
}

TinyInstance make_tiny_instance(ModelKind kind, DynamicsKind dynamics, std::uint64_t seed) {
  constexpr Index nodes = 4, steps = 6;
  TinyInstance inst;
  inst.graph = GraphTopology(nodes, {{0, 1, 1.0}, {0, 2, 0.5}, {1, 2, 0.8}, {2, 3, 1.2}, {3, 0, 0.3}, {1, 3, 0.6}});
  ModelConfig mc = ModelConfig::defaults(kind);
  mc.dynamics = dynamics;
  mc.latent_dim = 4;
  mc.num_nodes = nodes;
  mc.value_dim = 1;
  mc.feature_dim = 1;
  inst.model = make_model(mc, inst.graph, seed);

  // Non-zero biases and initial state so every pathway is exercised away from
  // its zero initialisation.
  auto rng = stream_rng(seed, 1);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto& e : inst.model->parameters().entries())
    if (e.name.ends_with(".bias") || e.name == "gate_bias" || e.name == "initial_state")
      for (Index k = 0; k < e.value.size(); ++k) e.value.data()[k] = normal(rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < 2; ++s) {
    Eigen::VectorXd times(steps);
    double t = 0.0;
    for (Index i = 0; i < steps; ++i) times(i) = (t += 0.05 + 0.2 * unit(rng));
    ObservationSequence seq(times, nodes, 1, 1);
    for (Index i = 0; i < steps; ++i) {
      for (Index n = 0; n < nodes; ++n) seq.mask(i, n) = unit(rng) < 0.6;
      if (!seq.mask.row(i).any()) seq.mask(i, static_cast<Index>(unit(rng) * nodes) % nodes) = true;
      for (Index n = 0; n < nodes; ++n) {
        if (!seq.mask(i, n)) continue;
        seq.values[static_cast<std::size_t>(i)](n, 0) = normal(rng);
        seq.features[static_cast<std::size_t>(i)](n, 0) = unit(rng);
      }
    }
    inst.sequences.push_back(std::move(seq));
  }
  inst.loss.weight = WeightFunction::exponential(0.3);
  inst.loss.warmup = 1;
  inst.loss.horizon = 3;
  return inst;
}

VerifyResult verify_dynamics_oracle(std::uint64_t seed, double tolerance) {
  VerifyResult r{"dynamics-oracle", true, 0.0, tolerance, ""};
  auto rng = stream_rng(seed, 2);
  std::uniform_real_distribution<double> rate(0.05, 3.0), value(-1.0, 1.0), delta(0.0, 1.0);
  constexpr Index dim = 6;
  for (auto kind : {DynamicsKind::Exponential, DynamicsKind::Periodic}) {
    for (int draw = 0; draw < 100; ++draw) {
      Eigen::VectorXd w(dim), c(dim);
      for (Index k = 0; k < dim; ++k) {
        w(k) = rate(rng);
        c(k) = value(rng);
      }
      const double dt = delta(rng);
      const Eigen::MatrixXd A = kind == DynamicsKind::Exponential ? exponential_generator(w) : periodic_generator(w);
      const Eigen::VectorXd closed = evolve(kind, w, c, dt);
      const Eigen::VectorXd ode = ode_reference(A, c, dt, 2000);
      r.worst = std::max(r.worst, (closed - ode).cwiseAbs().maxCoeff());
    }
  }
  r.passed = r.worst < tolerance;
  return r;
}

VerifyResult verify_loss_oracle(std::uint64_t seed, double tolerance) {
  VerifyResult r{"loss-oracle", true, 0.0, tolerance, ""};
  auto rng = stream_rng(seed, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index nodes = 1 + static_cast<Index>(unit(rng) * 4), steps = 4 + static_cast<Index>(unit(rng) * 8);
    const Index dy = 1 + static_cast<Index>(unit(rng) * 2);
    Eigen::VectorXd times(steps);
    double t = 0.0;
    for (Index i = 0; i < steps; ++i) times(i) = (t += 0.01 + 0.1 * unit(rng));
    ObservationSequence seq(times, nodes, dy, 0);
    for (Index i = 0; i < steps; ++i) {
      for (Index n = 0; n < nodes; ++n) seq.mask(i, n) = unit(rng) < 0.5;
      if (!seq.mask.row(i).any()) seq.mask(i, 0) = true;
      for (Index n = 0; n < nodes; ++n)
        if (seq.mask(i, n))
          for (Index k = 0; k < dy; ++k) seq.values[static_cast<std::size_t>(i)](n, k) = normal(rng);
    }
    LossConfig config;
    config.weight = WeightFunction::exponential(0.04 + unit(rng));
    config.warmup = static_cast<Index>(unit(rng) * (steps - 2));
    config.horizon = steps + 1;

    ad::Tape tape;
    PredictionSet preds;
    preds.num_nodes = nodes;
    preds.value_dim = dy;
    std::vector<Eigen::MatrixXd> raw;
    for (Index s = config.warmup; s + 1 < steps; ++s) {
      PredictionBlock block;
      block.source = s;
      Eigen::MatrixXd v(static_cast<Index>(steps - s - 1) * nodes, dy);
      for (Index k = 0; k < v.size(); ++k) v.data()[k] = normal(rng);
      for (Index j = s + 1; j < steps; ++j) block.targets.push_back(j);
      block.values = tape.constant(v);
      raw.push_back(v);
      preds.blocks.push_back(std::move(block));
    }
    const double fast = sequence_loss(preds, seq, config).value()(0, 0);

    // Direct sum: every source after warm-up, every later observation, each
    // target's weight shared among its j - N_init sources.
    double direct = 0.0, n_obs = 0.0;
    for (Index j = config.warmup + 1; j < steps; ++j) n_obs += static_cast<double>(seq.observed_count(j));
    for (Index s = config.warmup; s + 1 < steps; ++s) {
      const auto& v = raw[static_cast<std::size_t>(s - config.warmup)];
      for (Index j = s + 1; j < steps; ++j) {
        for (Index n = 0; n < nodes; ++n) {
          if (!seq.mask(j, n)) continue;
          const Eigen::RowVectorXd d = v.row((j - s - 1) * nodes + n) - seq.values[static_cast<std::size_t>(j)].row(n);
          const double ell = d.squaredNorm() / static_cast<double>(dy);
          direct += ell * config.weight(times(j) - times(s)) / static_cast<double>(j - config.warmup);
        }
      }
    }
    direct /= n_obs;
    r.worst = std::max(r.worst, std::abs(fast - direct));
  }
  r.passed = r.worst < tolerance;
  return r;
}

VerifyResult verify_gradcheck(std::uint64_t seed, double rtol) {
  VerifyResult r{"gradcheck", true, 0.0, rtol, ""};
  std::ostringstream detail;
  for (auto kind : {DynamicsKind::Static, DynamicsKind::Exponential, DynamicsKind::Periodic}) {
    TinyInstance inst = make_tiny_instance(ModelKind::Tgnn4i, kind, seed);
    const GradcheckReport rep = gradcheck(*inst.model, inst.sequences, inst.loss);
    detail << to_string(kind) << "=" << rep.max_relative_error << " ";
    r.worst = std::max(r.worst, rep.max_relative_error);
  }
  r.detail = detail.str();
  r.passed = r.worst < rtol;
  return r;
}

}  // namespace tgnn4i
