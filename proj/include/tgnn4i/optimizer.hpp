#pragma once

#include <vector>

#include "tgnn4i/parameters.hpp"

namespace tgnn4i {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam on one matrix; `step` is the 1-based update count.
void adam_step(Eigen::MatrixXd& value, const Eigen::MatrixXd& grad, Eigen::MatrixXd& first, Eigen::MatrixXd& second,
               long step, const AdamOptions& options);

/// Adam over every entry of a ParameterStore, using the stored gradients.
class Adam {
 public:
  Adam(const ParameterStore& store, AdamOptions options = {});

  void step(ParameterStore& store);
  long steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  long steps_ = 0;
  std::vector<Eigen::MatrixXd> first_;
  std::vector<Eigen::MatrixXd> second_;
};

}  // namespace tgnn4i
