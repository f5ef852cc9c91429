#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tgnn4i/autodiff.hpp"
#include "tgnn4i/models.hpp"
#include "tgnn4i/sequence.hpp"

namespace tgnn4i {

class LossError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class WeightKind { Constant, Exponential, Gaussian, Indicator };

/// Forecast-horizon weighting w(dt):
///   constant     1
///   exponential  exp(-dt / scale)
///   gaussian     exp(-((dt - center) / scale)^2)
///   indicator    1{dt in [lower, upper]}
struct WeightFunction {
  WeightKind kind = WeightKind::Exponential;
  double scale = 0.04;
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  static WeightFunction constant();
  static WeightFunction exponential(double scale);
  static WeightFunction gaussian(double center, double scale);
  static WeightFunction indicator(double lower, double upper);

  double operator()(double delta) const;
  void validate() const;
  std::string describe() const;
};

/// Named presets: w1 constant, w2 exponential(0.04), w3 gaussian(0.1, 0.02),
/// w4 indicator[0.18, 0.22].
WeightFunction weight_preset(std::string_view name);

struct LossConfig {
  WeightFunction weight;
  Index warmup = 5;    // N_init
  Index horizon = 10;  // N_max

  void validate() const;
  UnrollOptions unroll() const { return {warmup, horizon}; }
};

/// N_obs: observations at 0-based steps warmup + 1 .. N_t - 1.
Index supervised_count(const ObservationSequence& seq, const LossConfig& config);

/// L = (1/N_obs) sum over (s, j, n) of l(y_hat_{s->j}^n, y_j^n) w(t_j - t_s) / min(N_max, j - N_init)
/// with l the mean squared error over d_y and 0-based steps s >= N_init.
ad::Var sequence_loss(const PredictionSet& predictions, const ObservationSequence& seq, const LossConfig& config);

/// Arithmetic mean; throws on an empty batch.
double batch_loss(std::span<const double> losses);

/// One supervised prediction with its loss ingredients.
struct PredictionError {
  Index source = 0;
  Index target = 0;
  Index node = 0;
  double delta = 0.0;
  double squared_error = 0.0;  // mean over d_y
  double weight = 0.0;
  double denominator = 1.0;
};

std::vector<PredictionError> prediction_errors(const PredictionSet& predictions, const ObservationSequence& seq,
                                               const LossConfig& config);

}  // namespace tgnn4i
