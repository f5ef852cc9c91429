#include "tgnn4i/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace tgnn4i {

void adam_step(Eigen::MatrixXd& value, const Eigen::MatrixXd& grad, Eigen::MatrixXd& first, Eigen::MatrixXd& second,
               long step, const AdamOptions& options) {
  if (grad.rows() != value.rows() || grad.cols() != value.cols() || first.rows() != value.rows() ||
      first.cols() != value.cols() || second.rows() != value.rows() || second.cols() != value.cols())
    throw std::invalid_argument("adam: parameter, gradient and moment shapes differ");
  if (step < 1) throw std::invalid_argument("adam: step count starts at 1");
  first = options.beta1 * first + (1.0 - options.beta1) * grad;
  second = options.beta2 * second + (1.0 - options.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
  value.array() -= options.learning_rate * (first.array() / c1) / ((second.array() / c2).sqrt() + options.epsilon);
}

Adam::Adam(const ParameterStore& store, AdamOptions options) : options_(options) {
  for (const auto& e : store.entries()) {
    first_.push_back(Eigen::MatrixXd::Zero(e.value.rows(), e.value.cols()));
    second_.push_back(Eigen::MatrixXd::Zero(e.value.rows(), e.value.cols()));
  }
}

void Adam::step(ParameterStore& store) {
  if (store.size() != first_.size()) throw std::invalid_argument("adam: store does not match optimizer state");
  ++steps_;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& e = store.at(i);
    adam_step(e.value, e.grad, first_[i], second_[i], steps_, options_);
  }
}

}  // namespace tgnn4i
