#pragma once

// Continuous-time recurrent forecasters over graphs.
//
// Every trainable model keeps a latent bank with, per row (node, or a single
// row for the joint baseline): the decay target h_bar, the jump value c (the
// dynamic component right after the last update), the dynamics parameters w
// and the time of the last update. Between updates the state is
//   h(t) = h_bar + evolve(w, c, t - t_last).
//
// The update is a GRU variant producing seven chunks from a state pathway u
// and an input pathway v (bias b_1..b_7 folded into one 1 x 7d row):
//   r = sig(v1 + u1 + b1)      z = sig(v2 + u2 + b2)
//   q = tanh(v3 + r * u3 + b3) h_bar + c = (1 - z) h + z q
//   rb = sig(v4 + u4 + b4)     zb = sig(v5 + u5 + b5)
//   qb = tanh(v6 + rb * u6 + b6)
//   h_bar = (1 - zb) h_bar_prev + zb qb
//   w = softplus(v7 + u7 + b7)
// Only observed rows take the new values.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgnn4i/autodiff.hpp"
#include "tgnn4i/dynamics.hpp"
#include "tgnn4i/graph.hpp"
#include "tgnn4i/message_passing.hpp"
#include "tgnn4i/parameters.hpp"
#include "tgnn4i/sequence.hpp"

namespace tgnn4i {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ModelKind { Tgnn4i, GruDNode, GruDJoint, PredictPrevious };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::Tgnn4i;
  DynamicsKind dynamics = DynamicsKind::Exponential;
  Index latent_dim = 32;
  /// Layers in each update pathway: GNN layers for TGNN4I, dense for GRU-D.
  Index gru_layers = 2;
  /// GNN layers at the start of the predictive model (TGNN4I only).
  Index readout_gnn_layers = 2;
  /// Fully connected layers closing the predictive model.
  Index readout_fc_layers = 2;
  Index num_nodes = 0;
  Index value_dim = 1;
  Index feature_dim = 0;

  /// Architecture defaults for a model kind; data shape left at zero.
  static ModelConfig defaults(ModelKind kind);
  void validate() const;
};

struct UnrollOptions {
  Index warmup = 5;   // N_init
  Index horizon = 10; // N_max
};

/// Per-row continuous-time state.
struct LatentBank {
  ad::Var target;
  ad::Var jump;
  ad::Var dynamics;
  Eigen::VectorXd last_update;

  Index rows() const { return last_update.size(); }
};

/// Predictions from step `source` (0-based) to every step in `targets`;
/// row k * |V| + n of `values` is node n at targets[k].
struct PredictionBlock {
  Index source = 0;
  std::vector<Index> targets;
  ad::Var values;
};

struct PredictionEntry {
  Index source = 0;
  Index target = 0;
  Index node = 0;
  Eigen::RowVectorXd value;
};

struct PredictionSet {
  Index num_nodes = 0;
  Index value_dim = 0;
  std::vector<PredictionBlock> blocks;

  bool empty() const { return blocks.empty(); }
  /// (source, target, node) triples with the node observed at the target.
  std::vector<PredictionEntry> entries(const ObservationSequence& seq) const;
};

class Forecaster {
 public:
  virtual ~Forecaster() = default;

  const ModelConfig& config() const { return config_; }
  ModelKind kind() const { return config_.kind; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  bool trainable() const { return params_.size() > 0; }

  BoundParameters bind(ad::Tape& tape) const { return BoundParameters(tape, params_); }

  /// Walks the sequence, updating at every step and emitting predictions
  /// from each step s >= warmup to the next `horizon` steps.
  virtual PredictionSet unroll(const BoundParameters& params, const ObservationSequence& seq,
                               const UnrollOptions& options) const = 0;

 protected:
  explicit Forecaster(ModelConfig config) : config_(std::move(config)) {}

  ModelConfig config_;
  ParameterStore params_;
};

/// Shared machinery for the models with a GRU update and latent dynamics.
class RecurrentForecaster : public Forecaster {
 public:
  LatentBank initial_bank(const BoundParameters& params) const;

  /// One GRU update at time t. `observed` has one entry per graph node.
  LatentBank update(const BoundParameters& params, const LatentBank& bank, double t,
                    const Eigen::Array<bool, 1, Eigen::Dynamic>& observed, const Eigen::MatrixXd& values,
                    const Eigen::MatrixXd& features) const;

  /// Predictions at several times, stacked: row k * |V| + n is node n at
  /// times[k]. features[k] is the |V| x d_x feature block for times[k].
  ad::Var predict(const BoundParameters& params, const LatentBank& bank, std::span<const double> times,
                  std::span<const Eigen::MatrixXd> features) const;

  /// |V| x d_y prediction at a single time.
  ad::Var predict_at(const BoundParameters& params, const LatentBank& bank, double t,
                     const Eigen::MatrixXd& features) const;

  PredictionSet unroll(const BoundParameters& params, const ObservationSequence& seq,
                       const UnrollOptions& options) const override;

  ParamId initial_state_id() const { return initial_state_; }
  ParamId gate_bias_id() const { return gate_bias_; }

 protected:
  explicit RecurrentForecaster(ModelConfig config);
  void register_shared(Index bank_rows);

  virtual Index bank_rows() const = 0;
  /// Evolved state at each time joined with its readout features:
  /// (copies * bank_rows) x (d + feature width).
  ad::Var readout_input(const BoundParameters& params, const LatentBank& bank, std::span<const double> times,
                        std::span<const Eigen::MatrixXd> features) const;
  /// Rows of the bank that take the update.
  virtual Eigen::Array<bool, Eigen::Dynamic, 1> updated_rows(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed) const = 0;
  /// Input x~ (bank_rows x input width) for the input pathway.
  virtual Eigen::MatrixXd update_input(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed,
                                       const Eigen::MatrixXd& values, const Eigen::MatrixXd& features) const = 0;
  /// Feature block appended to the latent state for prediction (bank_rows x ?).
  virtual Eigen::MatrixXd readout_features(const Eigen::MatrixXd& features) const = 0;
  virtual ad::Var state_pathway(const BoundParameters& params, const ad::Var& state) const = 0;
  virtual ad::Var input_pathway(const BoundParameters& params, const ad::Var& input) const = 0;
  /// Readout for `copies` stacked bank replicas; returns (copies*|V|) x d_y.
  virtual ad::Var readout(const BoundParameters& params, const ad::Var& input, Index copies) const = 0;

  ParamId initial_state_;
  ParamId gate_bias_;
};

/// The graph model: GNN pathways in the update and a GNN predictive head.
class Tgnn4iModel : public RecurrentForecaster {
 public:
  Tgnn4iModel(ModelConfig config, GraphTopology graph, std::uint64_t seed);

  const GraphTopology& graph() const { return graph_; }
  const GnnStack& state_stack() const { return state_stack_; }
  const GnnStack& input_stack() const { return input_stack_; }
  const GnnStack& readout_stack() const { return readout_stack_; }

 protected:
  Index bank_rows() const override { return config_.num_nodes; }
  Eigen::Array<bool, Eigen::Dynamic, 1> updated_rows(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed) const override;
  Eigen::MatrixXd update_input(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed, const Eigen::MatrixXd& values,
                               const Eigen::MatrixXd& features) const override;
  Eigen::MatrixXd readout_features(const Eigen::MatrixXd& features) const override { return features; }
  ad::Var state_pathway(const BoundParameters& params, const ad::Var& state) const override;
  ad::Var input_pathway(const BoundParameters& params, const ad::Var& input) const override;
  ad::Var readout(const BoundParameters& params, const ad::Var& input, Index copies) const override;

 private:
  const AggregationPlan& plan(Index copies) const;

  GraphTopology graph_;
  // plans_[k - 1] covers k copies; deque keeps references stable while growing.
  mutable std::deque<AggregationPlan> plans_;
  mutable std::mutex plans_mutex_;
  GnnStack state_stack_;
  GnnStack input_stack_;
  GnnStack readout_stack_;
};

/// Independent per-node GRU-D: dense pathways, fully connected head.
class GruDNodeModel : public RecurrentForecaster {
 public:
  GruDNodeModel(ModelConfig config, std::uint64_t seed);

  const DenseStack& state_stack() const { return state_stack_; }
  const DenseStack& input_stack() const { return input_stack_; }
  const DenseStack& readout_stack() const { return readout_stack_; }

 protected:
  Index bank_rows() const override { return config_.num_nodes; }
  Eigen::Array<bool, Eigen::Dynamic, 1> updated_rows(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed) const override;
  Eigen::MatrixXd update_input(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed, const Eigen::MatrixXd& values,
                               const Eigen::MatrixXd& features) const override;
  Eigen::MatrixXd readout_features(const Eigen::MatrixXd& features) const override { return features; }
  ad::Var state_pathway(const BoundParameters& params, const ad::Var& state) const override;
  ad::Var input_pathway(const BoundParameters& params, const ad::Var& input) const override;
  ad::Var readout(const BoundParameters& params, const ad::Var& input, Index copies) const override;

 private:
  DenseStack state_stack_;
  DenseStack input_stack_;
  DenseStack readout_stack_;
};

/// GRU-D over the concatenation of all node series: one latent row, input
/// [y^1..y^V, x^1..x^V, 1{1 in O}..1{V in O}], output split back per node.
class GruDJointModel : public RecurrentForecaster {
 public:
  GruDJointModel(ModelConfig config, std::uint64_t seed);

 protected:
  Index bank_rows() const override { return 1; }
  Eigen::Array<bool, Eigen::Dynamic, 1> updated_rows(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed) const override;
  Eigen::MatrixXd update_input(const Eigen::Array<bool, 1, Eigen::Dynamic>& observed, const Eigen::MatrixXd& values,
                               const Eigen::MatrixXd& features) const override;
  Eigen::MatrixXd readout_features(const Eigen::MatrixXd& features) const override;
  ad::Var state_pathway(const BoundParameters& params, const ad::Var& state) const override;
  ad::Var input_pathway(const BoundParameters& params, const ad::Var& input) const override;
  ad::Var readout(const BoundParameters& params, const ad::Var& input, Index copies) const override;

 private:
  DenseStack state_stack_;
  DenseStack input_stack_;
  DenseStack readout_stack_;
};

/// Last observed value per node, zero before the first observation.
class PredictPreviousModel : public Forecaster {
 public:
  explicit PredictPreviousModel(ModelConfig config);

  PredictionSet unroll(const BoundParameters& params, const ObservationSequence& seq,
                       const UnrollOptions& options) const override;
};

/// Predict-previous predictions on a fresh set of tape constants.
PredictionSet predict_previous(ad::Tape& tape, const ObservationSequence& seq, const UnrollOptions& options);

std::unique_ptr<Forecaster> make_model(const ModelConfig& config, const GraphTopology& graph, std::uint64_t seed);

/// Copies TGNN4I parameters into a GRU-D (node) model so that both agree on
/// an edgeless graph: W_self of each GNN layer becomes a dense weight and the
/// readout GNN layers become dense layers with zero bias. The GRU-D model
/// needs gru_layers equal and readout_fc_layers = readout GNN + FC layers.
void match_node_baseline_parameters(const Tgnn4iModel& source, GruDNodeModel& target);

// Checkpoint = parameters.json (parameter snapshot) + manifest.json.
void save_checkpoint(const std::filesystem::path& dir, const Forecaster& model, const GraphTopology& graph);
std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& dir, const GraphTopology& graph);

}  // namespace tgnn4i
