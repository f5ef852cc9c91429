#include "tgnn4i/models.hpp"

#include <fstream>
#include <random>
#include <string>

#include "json.hpp"

namespace tgnn4i {

namespace {

using RowMask = Eigen::Array<bool, 1, Eigen::Dynamic>;
using ColMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

constexpr int kGateChunks = 7;

std::vector<Index> stack_widths(Index in, Index hidden, Index out, Index layers) {
  std::vector<Index> widths{in};
  for (Index l = 1; l < layers; ++l) widths.push_back(hidden);
  widths.push_back(out);
  return widths;
}

Eigen::MatrixXd indicator(const RowMask& observed) {
  Eigen::MatrixXd m(observed.size(), 1);
  for (Index n = 0; n < observed.size(); ++n) m(n, 0) = observed(n) ? 1.0 : 0.0;
  return m;
}

// Row-major flattening of a |V| x d block into 1 x (|V| d).
Eigen::MatrixXd flatten(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(1, m.size());
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out(0, r * m.cols() + c) = m(r, c);
  return out;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Tgnn4i: return "tgnn4i";
    case ModelKind::GruDNode: return "grud-node";
    case ModelKind::GruDJoint: return "grud-joint";
    case ModelKind::PredictPrevious: return "predict-prev";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto kind : {ModelKind::Tgnn4i, ModelKind::GruDNode, ModelKind::GruDJoint, ModelKind::PredictPrevious})
    if (to_string(kind) == name) return kind;
  throw ModelError("unknown model kind '" + std::string(name) + "'");
}

ModelConfig ModelConfig::defaults(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  if (kind != ModelKind::Tgnn4i) {
    c.gru_layers = 1;
    c.readout_gnn_layers = 0;
  }
  return c;
}

void ModelConfig::validate() const {
  if (num_nodes < 1) throw ModelError("model: need at least one node");
  if (value_dim < 1) throw ModelError("model: value dimension must be positive");
  if (feature_dim < 0) throw ModelError("model: feature dimension must be non-negative");
  if (kind == ModelKind::PredictPrevious) return;
  if (latent_dim < 1) throw ModelError("model: latent dimension must be positive");
  if (dynamics == DynamicsKind::Periodic && latent_dim % 2 != 0)
    throw ModelError("model: periodic dynamics need an even latent dimension");
  if (gru_layers < 1) throw ModelError("model: need at least one update layer");
  if (readout_gnn_layers < 0 || readout_fc_layers < 0 || readout_gnn_layers + readout_fc_layers < 1)
    throw ModelError("model: predictive model needs at least one layer");
  if (kind != ModelKind::Tgnn4i && readout_gnn_layers != 0)
    throw ModelError("model: GRU-D baselines have no GNN readout layers");
}

std::vector<PredictionEntry> PredictionSet::entries(const ObservationSequence& seq) const {
  std::vector<PredictionEntry> out;
  for (const auto& block : blocks) {
    const auto& values = block.values.value();
    for (std::size_t k = 0; k < block.targets.size(); ++k) {
      const Index j = block.targets[k];
      for (Index n = 0; n < num_nodes; ++n) {
        if (!seq.mask(j, n)) continue;
        out.push_back({block.source, j, n, values.row(static_cast<Index>(k) * num_nodes + n)});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RecurrentForecaster::RecurrentForecaster(ModelConfig config) : Forecaster(std::move(config)) { config_.validate(); }

void RecurrentForecaster::register_shared(Index rows) {
  const Index d = config_.latent_dim;
  initial_state_ = params_.add("initial_state", Eigen::MatrixXd::Zero(rows, d));
  gate_bias_ = params_.add("gate_bias", Eigen::MatrixXd::Zero(1, kGateChunks * d));
}

LatentBank RecurrentForecaster::initial_bank(const BoundParameters& params) const {
  const Index rows = bank_rows(), d = config_.latent_dim;
  ad::Tape& tape = params.tape();
  LatentBank bank;
  bank.target = tape.constant(Eigen::MatrixXd::Zero(rows, d));
  bank.jump = params[initial_state_];
  bank.dynamics = broadcast_rows(softplus(slice_cols(params[gate_bias_], 6 * d, d)), rows);
  bank.last_update = Eigen::VectorXd::Zero(rows);
  return bank;
}

LatentBank RecurrentForecaster::update(const BoundParameters& params, const LatentBank& bank, double t,
                                       const RowMask& observed, const Eigen::MatrixXd& values,
                                       const Eigen::MatrixXd& features) const {
  const Index nodes = config_.num_nodes, d = config_.latent_dim, rows = bank_rows();
  if (observed.size() != nodes) throw ModelError("update: observation mask does not match node count");
  if (!observed.any()) throw ModelError("update: no node observed");
  if (values.rows() != nodes || values.cols() != config_.value_dim || features.rows() != nodes ||
      features.cols() != config_.feature_dim)
    throw ModelError("update: value or feature block has the wrong shape");
  const Eigen::VectorXd elapsed = Eigen::VectorXd::Constant(rows, t) - bank.last_update;
  if ((elapsed.array() < 0.0).any()) throw ModelError("update: time is earlier than a previous update");

  ad::Tape& tape = params.tape();
  const ad::Var h = bank.target + evolve(config_.dynamics, bank.dynamics, bank.jump, elapsed);
  const ad::Var u = state_pathway(params, h);
  const ad::Var v = input_pathway(params, tape.constant(update_input(observed, values, features))) +
                    broadcast_rows(params[gate_bias_], rows);
  const auto us = split_cols(u, kGateChunks);
  const auto vs = split_cols(v, kGateChunks);

  const ad::Var r = sigmoid(vs[0] + us[0]);
  const ad::Var z = sigmoid(vs[1] + us[1]);
  const ad::Var q = tanh(vs[2] + mul(r, us[2]));
  const ad::Var new_state = h + mul(z, q - h);
  const ad::Var rb = sigmoid(vs[3] + us[3]);
  const ad::Var zb = sigmoid(vs[4] + us[4]);
  const ad::Var qb = tanh(vs[5] + mul(rb, us[5]));
  const ad::Var new_target = bank.target + mul(zb, qb - bank.target);
  const ad::Var new_jump = new_state - new_target;
  const ad::Var new_dynamics = softplus(vs[6] + us[6]);

  const ColMask take = updated_rows(observed);
  if (take.all()) {
    LatentBank next{new_target, new_jump, new_dynamics, Eigen::VectorXd::Constant(rows, t)};
    return next;
  }
  Eigen::MatrixXd keep_new(rows, d);
  for (Index n = 0; n < rows; ++n) keep_new.row(n).setConstant(take(n) ? 1.0 : 0.0);
  const ad::Var on = tape.constant(keep_new);
  const ad::Var off = tape.constant(Eigen::MatrixXd::Ones(rows, d) - keep_new);
  // Exact selection: 1 * a + 0 * b == a for finite a, b.
  auto select = [&](const ad::Var& fresh, const ad::Var& old) { return mul(on, fresh) + mul(off, old); };
  LatentBank next;
  next.target = select(new_target, bank.target);
  next.jump = select(new_jump, bank.jump);
  next.dynamics = select(new_dynamics, bank.dynamics);
  next.last_update = bank.last_update;
  for (Index n = 0; n < rows; ++n)
    if (take(n)) next.last_update(n) = t;
  return next;
}

ad::Var RecurrentForecaster::readout_input(const BoundParameters& params, const LatentBank& bank,
                                           std::span<const double> times,
                                           std::span<const Eigen::MatrixXd> features) const {
  const Index copies = static_cast<Index>(times.size());
  if (copies < 1) throw ModelError("predict: no prediction times");
  if (static_cast<Index>(features.size()) != copies) throw ModelError("predict: one feature block per time needed");
  const Index rows = bank.rows();
  Eigen::VectorXd deltas(rows * copies);
  std::vector<Index> replicate(static_cast<std::size_t>(rows * copies));
  for (Index k = 0; k < copies; ++k) {
    for (Index n = 0; n < rows; ++n) {
      const double delta = times[static_cast<std::size_t>(k)] - bank.last_update(n);
      if (!(delta >= 0.0)) throw ModelError("predict: prediction time is earlier than the last update");
      deltas(k * rows + n) = delta;
      replicate[static_cast<std::size_t>(k * rows + n)] = n;
    }
  }
  ad::Var target = bank.target, jump = bank.jump, dyn = bank.dynamics;
  if (copies > 1) {
    const std::span<const Index> idx(replicate);
    target = gather_rows(target, idx);
    jump = gather_rows(jump, idx);
    dyn = gather_rows(dyn, idx);
  }
  ad::Var state = target + evolve(config_.dynamics, dyn, jump, deltas);

  std::vector<Eigen::MatrixXd> blocks;
  Index width = 0;
  for (const auto& x : features) {
    if (x.rows() != config_.num_nodes || x.cols() != config_.feature_dim)
      throw ModelError("predict: feature block has the wrong shape");
    blocks.push_back(readout_features(x));
    width = blocks.back().cols();
  }
  if (width > 0) {
    Eigen::MatrixXd stacked(rows * copies, width);
    for (Index k = 0; k < copies; ++k) stacked.middleRows(k * rows, rows) = blocks[static_cast<std::size_t>(k)];
    state = ad::concat_cols({state, params.tape().constant(stacked)});
  }
  return state;
}

ad::Var RecurrentForecaster::predict(const BoundParameters& params, const LatentBank& bank,
                                     std::span<const double> times,
                                     std::span<const Eigen::MatrixXd> features) const {
  return readout(params, readout_input(params, bank, times, features), static_cast<Index>(times.size()));
}

ad::Var RecurrentForecaster::predict_at(const BoundParameters& params, const LatentBank& bank, double t,
                                        const Eigen::MatrixXd& features) const {
  const double times[1] = {t};
  return predict(params, bank, std::span<const double>(times, 1), std::span<const Eigen::MatrixXd>(&features, 1));
}

PredictionSet RecurrentForecaster::unroll(const BoundParameters& params, const ObservationSequence& seq,
                                          const UnrollOptions& options) const {
  const Index steps = seq.num_steps();
  if (seq.num_nodes() != config_.num_nodes) throw ModelError("unroll: sequence node count differs from model");
  if (options.warmup < 0 || options.horizon < 0) throw ModelError("unroll: warmup and horizon must be non-negative");
  if (options.warmup + 2 > steps)
    throw ModelError("unroll: sequence has " + std::to_string(steps) + " steps, needs at least warmup + 2");

  PredictionSet out;
  out.num_nodes = config_.num_nodes;
  out.value_dim = config_.value_dim;
  LatentBank bank = initial_bank(params);
  for (Index s = 0; s < steps; ++s) {
    bank = update(params, bank, seq.times(s), seq.mask.row(s), seq.values[static_cast<std::size_t>(s)],
                  seq.features[static_cast<std::size_t>(s)]);
    if (s < options.warmup || s + 1 >= steps || options.horizon == 0) continue;
    const Index last = std::min(steps - 1, s + options.horizon);
    PredictionBlock block;
    block.source = s;
    std::vector<double> times;
    for (Index j = s + 1; j <= last; ++j) {
      block.targets.push_back(j);
      times.push_back(seq.times(j));
    }
    block.values = predict(params, bank, times,
                           std::span<const Eigen::MatrixXd>(seq.features.data() + s + 1, static_cast<std::size_t>(last - s)));
    out.blocks.push_back(std::move(block));
  }
  return out;
}

// ---------------------------------------------------------------------------

Tgnn4iModel::Tgnn4iModel(ModelConfig config, GraphTopology graph, std::uint64_t seed)
    : RecurrentForecaster(std::move(config)), graph_(std::move(graph)) {
  if (config_.kind != ModelKind::Tgnn4i) throw ModelError("Tgnn4iModel: config kind must be tgnn4i");
  if (graph_.num_nodes() != config_.num_nodes) throw ModelError("Tgnn4iModel: graph node count differs from config");
  std::mt19937_64 rng(seed);
  const Index d = config_.latent_dim, dy = config_.value_dim, dx = config_.feature_dim;
  register_shared(config_.num_nodes);
  state_stack_ = GnnStack(params_, "state", stack_widths(d, d, kGateChunks * d, config_.gru_layers),
                          config_.gru_layers, rng);
  input_stack_ = GnnStack(params_, "input", stack_widths(dy + dx + 1, d, kGateChunks * d, config_.gru_layers),
                          config_.gru_layers, rng);
  const Index g_layers = config_.readout_gnn_layers + config_.readout_fc_layers;
  readout_stack_ = GnnStack(params_, "readout", stack_widths(d + dx, d, dy, g_layers), config_.readout_gnn_layers, rng);
  plans_.push_back(AggregationPlan::from_graph(graph_, 1));
}

const AggregationPlan& Tgnn4iModel::plan(Index copies) const {
  std::lock_guard lock(plans_mutex_);
  while (static_cast<Index>(plans_.size()) < copies)
    plans_.push_back(AggregationPlan::from_graph(graph_, static_cast<Index>(plans_.size()) + 1));
  return plans_[static_cast<std::size_t>(copies - 1)];
}

ColMask Tgnn4iModel::updated_rows(const RowMask& observed) const { return observed.transpose(); }

Eigen::MatrixXd Tgnn4iModel::update_input(const RowMask& observed, const Eigen::MatrixXd& values,
                                          const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd in(config_.num_nodes, values.cols() + features.cols() + 1);
  in << values, features, indicator(observed);
  return in;
}

ad::Var Tgnn4iModel::state_pathway(const BoundParameters& params, const ad::Var& state) const {
  return state_stack_.apply(params, state, plans_.front());
}

ad::Var Tgnn4iModel::input_pathway(const BoundParameters& params, const ad::Var& input) const {
  return input_stack_.apply(params, input, plans_.front());
}

ad::Var Tgnn4iModel::readout(const BoundParameters& params, const ad::Var& input, Index copies) const {
  return readout_stack_.apply(params, input, plan(copies));
}

// ---------------------------------------------------------------------------

GruDNodeModel::GruDNodeModel(ModelConfig config, std::uint64_t seed) : RecurrentForecaster(std::move(config)) {
  if (config_.kind != ModelKind::GruDNode) throw ModelError("GruDNodeModel: config kind must be grud-node");
  std::mt19937_64 rng(seed);
  const Index d = config_.latent_dim, dy = config_.value_dim, dx = config_.feature_dim;
  register_shared(config_.num_nodes);
  state_stack_ = DenseStack(params_, "state", stack_widths(d, d, kGateChunks * d, config_.gru_layers), false, rng);
  input_stack_ =
      DenseStack(params_, "input", stack_widths(dy + dx + 1, d, kGateChunks * d, config_.gru_layers), false, rng);
  readout_stack_ = DenseStack(params_, "readout", stack_widths(d + dx, d, dy, config_.readout_fc_layers), true, rng);
}

ColMask GruDNodeModel::updated_rows(const RowMask& observed) const { return observed.transpose(); }

Eigen::MatrixXd GruDNodeModel::update_input(const RowMask& observed, const Eigen::MatrixXd& values,
                                            const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd in(config_.num_nodes, values.cols() + features.cols() + 1);
  in << values, features, indicator(observed);
  return in;
}

ad::Var GruDNodeModel::state_pathway(const BoundParameters& params, const ad::Var& state) const {
  return state_stack_.apply(params, state);
}

ad::Var GruDNodeModel::input_pathway(const BoundParameters& params, const ad::Var& input) const {
  return input_stack_.apply(params, input);
}

ad::Var GruDNodeModel::readout(const BoundParameters& params, const ad::Var& input, Index) const {
  return readout_stack_.apply(params, input);
}

// ---------------------------------------------------------------------------

GruDJointModel::GruDJointModel(ModelConfig config, std::uint64_t seed) : RecurrentForecaster(std::move(config)) {
  if (config_.kind != ModelKind::GruDJoint) throw ModelError("GruDJointModel: config kind must be grud-joint");
  std::mt19937_64 rng(seed);
  const Index d = config_.latent_dim, v = config_.num_nodes;
  const Index dy = config_.value_dim, dx = config_.feature_dim;
  register_shared(1);
  state_stack_ = DenseStack(params_, "state", stack_widths(d, d, kGateChunks * d, config_.gru_layers), false, rng);
  input_stack_ = DenseStack(params_, "input", stack_widths(v * (dy + dx + 1), d, kGateChunks * d, config_.gru_layers),
                            false, rng);
  readout_stack_ =
      DenseStack(params_, "readout", stack_widths(d + v * dx, d, v * dy, config_.readout_fc_layers), true, rng);
}

ColMask GruDJointModel::updated_rows(const RowMask&) const { return ColMask::Constant(1, true); }

Eigen::MatrixXd GruDJointModel::update_input(const RowMask& observed, const Eigen::MatrixXd& values,
                                             const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd in(1, values.size() + features.size() + observed.size());
  in << flatten(values), flatten(features), indicator(observed).transpose();
  return in;
}

Eigen::MatrixXd GruDJointModel::readout_features(const Eigen::MatrixXd& features) const { return flatten(features); }

ad::Var GruDJointModel::state_pathway(const BoundParameters& params, const ad::Var& state) const {
  return state_stack_.apply(params, state);
}

ad::Var GruDJointModel::input_pathway(const BoundParameters& params, const ad::Var& input) const {
  return input_stack_.apply(params, input);
}

ad::Var GruDJointModel::readout(const BoundParameters& params, const ad::Var& input, Index copies) const {
  // copies x (|V| d_y) -> (copies |V|) x d_y, row-major.
  return reshape(readout_stack_.apply(params, input), copies * config_.num_nodes, config_.value_dim);
}

// ---------------------------------------------------------------------------

PredictPreviousModel::PredictPreviousModel(ModelConfig config) : Forecaster(std::move(config)) {
  config_.kind = ModelKind::PredictPrevious;
  config_.validate();
}

PredictionSet PredictPreviousModel::unroll(const BoundParameters& params, const ObservationSequence& seq,
                                           const UnrollOptions& options) const {
  if (seq.num_nodes() != config_.num_nodes) throw ModelError("unroll: sequence node count differs from model");
  return predict_previous(params.tape(), seq, options);
}

PredictionSet predict_previous(ad::Tape& tape, const ObservationSequence& seq, const UnrollOptions& options) {
  const Index steps = seq.num_steps(), nodes = seq.num_nodes(), dy = seq.value_dim();
  if (options.warmup < 0 || options.horizon < 0) throw ModelError("unroll: warmup and horizon must be non-negative");
  if (options.warmup + 2 > steps)
    throw ModelError("unroll: sequence has " + std::to_string(steps) + " steps, needs at least warmup + 2");
  PredictionSet out;
  out.num_nodes = nodes;
  out.value_dim = dy;
  Eigen::MatrixXd last = Eigen::MatrixXd::Zero(nodes, dy);
  for (Index s = 0; s < steps; ++s) {
    for (Index n = 0; n < nodes; ++n)
      if (seq.mask(s, n)) last.row(n) = seq.values[static_cast<std::size_t>(s)].row(n);
    if (s < options.warmup || s + 1 >= steps || options.horizon == 0) continue;
    const Index end = std::min(steps - 1, s + options.horizon);
    PredictionBlock block;
    block.source = s;
    Eigen::MatrixXd stacked((end - s) * nodes, dy);
    for (Index j = s + 1; j <= end; ++j) {
      block.targets.push_back(j);
      stacked.middleRows((j - s - 1) * nodes, nodes) = last;
    }
    block.values = tape.constant(stacked);
    out.blocks.push_back(std::move(block));
  }
  return out;
}

std::unique_ptr<Forecaster> make_model(const ModelConfig& config, const GraphTopology& graph, std::uint64_t seed) {
  switch (config.kind) {
    case ModelKind::Tgnn4i: return std::make_unique<Tgnn4iModel>(config, graph, seed);
    case ModelKind::GruDNode: return std::make_unique<GruDNodeModel>(config, seed);
    case ModelKind::GruDJoint: return std::make_unique<GruDJointModel>(config, seed);
    case ModelKind::PredictPrevious: return std::make_unique<PredictPreviousModel>(config);
  }
  throw ModelError("unknown model kind");
}

void match_node_baseline_parameters(const Tgnn4iModel& source, GruDNodeModel& target) {
  const auto& sc = source.config();
  const auto& tc = target.config();
  if (sc.latent_dim != tc.latent_dim || sc.gru_layers != tc.gru_layers || sc.num_nodes != tc.num_nodes ||
      sc.value_dim != tc.value_dim || sc.feature_dim != tc.feature_dim || sc.dynamics != tc.dynamics ||
      tc.readout_fc_layers != sc.readout_gnn_layers + sc.readout_fc_layers)
    throw ModelError("match parameters: architectures are not compatible");
  const ParameterStore& from = source.parameters();
  ParameterStore& to = target.parameters();
  to[target.initial_state_id()].value = from[source.initial_state_id()].value;
  to[target.gate_bias_id()].value = from[source.gate_bias_id()].value;
  auto copy_pathway = [&](const GnnStack& a, const DenseStack& b) {
    for (std::size_t l = 0; l < a.gnn_layers().size(); ++l)
      to[b.layers()[l].weight()].value = from[a.gnn_layers()[l].self_weight()].value;
  };
  copy_pathway(source.state_stack(), target.state_stack());
  copy_pathway(source.input_stack(), target.input_stack());
  const auto& g = source.readout_stack();
  const auto& layers = target.readout_stack().layers();
  std::size_t l = 0;
  for (const auto& gnn : g.gnn_layers()) {
    to[layers[l].weight()].value = from[gnn.self_weight()].value;
    to[layers[l].bias()].value.setZero();
    ++l;
  }
  for (const auto& fc : g.dense_layers()) {
    to[layers[l].weight()].value = from[fc.weight()].value;
    to[layers[l].bias()].value = from[fc.bias()].value;
    ++l;
  }
}

void save_checkpoint(const std::filesystem::path& dir, const Forecaster& model, const GraphTopology& graph) {
  std::filesystem::create_directories(dir);
  const auto& c = model.config();
  nlohmann::ordered_json manifest = {{"kind", to_string(c.kind)},
                                     {"dynamics", to_string(c.dynamics)},
                                     {"latent_dim", c.latent_dim},
                                     {"gru_layers", c.gru_layers},
                                     {"readout_gnn_layers", c.readout_gnn_layers},
                                     {"readout_fc_layers", c.readout_fc_layers},
                                     {"num_nodes", c.num_nodes},
                                     {"value_dim", c.value_dim},
                                     {"feature_dim", c.feature_dim},
                                     {"graph_checksum", graph.checksum()}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("checkpoint: cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  model.parameters().save_json(dir / "parameters.json");
}

std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& dir, const GraphTopology& graph) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("checkpoint: cannot read " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: bad manifest: ") + e.what());
  }
  if (manifest.at("graph_checksum").get<std::uint64_t>() != graph.checksum())
    throw ModelError("checkpoint: graph checksum does not match the dataset graph");
  ModelConfig c;
  c.kind = parse_model_kind(manifest.at("kind").get<std::string>());
  c.dynamics = parse_dynamics_kind(manifest.at("dynamics").get<std::string>());
  c.latent_dim = manifest.at("latent_dim").get<Index>();
  c.gru_layers = manifest.at("gru_layers").get<Index>();
  c.readout_gnn_layers = manifest.at("readout_gnn_layers").get<Index>();
  c.readout_fc_layers = manifest.at("readout_fc_layers").get<Index>();
  c.num_nodes = manifest.at("num_nodes").get<Index>();
  c.value_dim = manifest.at("value_dim").get<Index>();
  c.feature_dim = manifest.at("feature_dim").get<Index>();
  auto model = make_model(c, graph, 0);
  if (model->trainable()) model->parameters().assign_values(ParameterStore::load_json(dir / "parameters.json"));
  return model;
}

}  // namespace tgnn4i
