// tgnn4i: generate synthetic data, train and evaluate forecasters, run the
// self-check suites.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 divergence or
// failed verification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tgnn4i/dataset.hpp"
#include "tgnn4i/gradcheck.hpp"
#include "tgnn4i/hash.hpp"
#include "tgnn4i/models.hpp"
#include "tgnn4i/synthetic.hpp"
#include "tgnn4i/train.hpp"

namespace fs = std::filesystem;
using namespace tgnn4i;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitFailure = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// FNV-1a of every regular file under `dir` except the manifest, by relative path.
Json artifact_checksums(const fs::path& dir) {
  std::map<std::string, std::string> sums;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() == "run_manifest.json") continue;
    sums[fs::relative(entry.path(), dir).generic_string()] = hex64(fnv1a(read_file(entry.path())));
  }
  Json j = Json::object();
  for (const auto& [k, v] : sums) j[k] = v;
  return j;
}

void write_manifest(const fs::path& out, const std::string& command, const std::vector<std::string>& argv,
                    const std::string& config_path, std::uint64_t seed, const Json& effective) {
  Json m;
  m["command"] = command;
  m["argv"] = argv;
  m["config_file"] = config_path;
  m["config_file_hash"] = config_path.empty() ? "" : hex64(fnv1a(read_file(config_path)));
  m["seed"] = seed;
  m["out"] = out.string();
  m["effective_config"] = effective;
  m["artifacts"] = artifact_checksums(out);
  write_file(out / "run_manifest.json", m.dump(2) + "\n");
}

struct GenerateArgs {
  SyntheticConfig config;
  std::string out;
};

int cmd_generate(const GenerateArgs& args, const std::vector<std::string>& argv) {
  try {
    args.config.validate();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  const SyntheticDataset data = generate_synthetic(args.config);
  const fs::path out(args.out);
  save_dataset(data.split, out, args.config.seed, args.config.to_json());
  write_manifest(out, "generate", argv, "", args.config.seed, Json::parse(args.config.to_json()));
  std::cout << "wrote " << data.split.train.size() + data.split.val.size() + data.split.test.size()
            << " sequences to " << out.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string data, out, config_file, model, dynamics, weight;
  std::optional<std::uint64_t> seed;
  std::optional<Index> latent_dim, max_epochs, patience, batch_size, workers;
  std::optional<double> learning_rate;
  bool quiet = false;
};

int cmd_train(const TrainArgs& args, const std::vector<std::string>& argv) {
  TrainConfig config;
  config.model = ModelConfig::defaults(ModelKind::Tgnn4i);
  config.loss = metric_loss_config();
  config.patience = 20;
  if (!args.config_file.empty()) {
    const std::string text = read_file(args.config_file);
    nlohmann::json probe;
    try {
      probe = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    // A model kind in the file picks that kind's architecture defaults first.
    if (probe.contains("model") && probe["model"].is_string())
      config.model = ModelConfig::defaults(parse_model_kind(probe["model"].get<std::string>()));
    config.apply_json(text);
  }
  if (!args.model.empty()) {
    const ModelKind kind = parse_model_kind(args.model);
    if (kind != config.model.kind) {
      const DynamicsKind dyn = config.model.dynamics;
      const Index d = config.model.latent_dim;
      config.model = ModelConfig::defaults(kind);
      config.model.dynamics = dyn;
      config.model.latent_dim = d;
    }
  }
  if (!args.dynamics.empty()) config.model.dynamics = parse_dynamics_kind(args.dynamics);
  if (!args.weight.empty()) config.loss.weight = weight_preset(args.weight);
  if (args.seed) config.seed = *args.seed;
  if (args.latent_dim) config.model.latent_dim = *args.latent_dim;
  if (args.max_epochs) config.max_epochs = *args.max_epochs;
  if (args.patience) config.patience = *args.patience;
  if (args.batch_size) config.batch_size = *args.batch_size;
  if (args.workers) config.workers = *args.workers;
  if (args.learning_rate) config.learning_rate = *args.learning_rate;

  const DatasetSplit data = load_dataset(args.data);
  config.model.num_nodes = data.graph.num_nodes();
  config.model.value_dim = data.value_dim;
  config.model.feature_dim = data.feature_dim;
  config.validate();

  const fs::path out(args.out);
  fs::create_directories(out);
  const auto on_epoch = [&](Index epoch, double tr, double val) {
    if (!args.quiet) std::printf("epoch %lld train %.6g val %.6g\n", static_cast<long long>(epoch), tr, val);
    std::fflush(stdout);
  };
  const TrainResult result = train(config, data, on_epoch);
  write_file(out / "metrics.json", result.report.to_json() + "\n");
  write_file(out / "bins.csv", result.report.bins_csv());
  write_file(out / "effective_config.json", Json::parse(config.to_json()).dump(2) + "\n");
  if (result.model->trainable()) save_checkpoint(out / "checkpoint", *result.model, data.graph);
  write_manifest(out, "train", argv, args.config_file, config.seed, Json::parse(config.to_json()));
  std::printf("test metric (x100): %.6f\n", result.report.test_metric);
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, weight = "w2", out, split = "test";
  Index workers = 1;
};

int cmd_eval(const EvalArgs& args, const std::vector<std::string>& argv) {
  LossConfig loss = metric_loss_config();
  loss.weight = weight_preset(args.weight);
  const DatasetSplit data = load_dataset(args.data);
  const std::vector<ObservationSequence>* part = nullptr;
  if (args.split == "train") part = &data.train;
  else if (args.split == "val") part = &data.val;
  else if (args.split == "test") part = &data.test;
  else throw UsageError("unknown split '" + args.split + "'");

  std::unique_ptr<Forecaster> model;
  if (args.checkpoint == "predict-prev") {
    ModelConfig mc = ModelConfig::defaults(ModelKind::PredictPrevious);
    mc.num_nodes = data.graph.num_nodes();
    mc.value_dim = data.value_dim;
    mc.feature_dim = data.feature_dim;
    model = make_model(mc, data.graph, 0);
  } else {
    if (!fs::is_directory(args.checkpoint)) throw DataError("checkpoint directory " + args.checkpoint + " does not exist");
    model = load_checkpoint(args.checkpoint, data.graph);
  }
  const EvaluationResult r = evaluate(*model, *part, loss, args.workers);
  MetricsReport report;
  report.test_metric = kMetricScale * r.loss;
  report.test_bins = r.bins;
  report.seed = dataset_seed(args.data);
  const fs::path out(args.out);
  fs::create_directories(out);
  write_file(out / "metrics.json", report.to_json() + "\n");
  write_file(out / "bins.csv", report.bins_csv());
  Json effective = {{"checkpoint", args.checkpoint}, {"data", args.data}, {"weight", args.weight}, {"split", args.split}};
  write_manifest(out, "eval", argv, "", report.seed, effective);
  std::printf("%s metric (x100, %s): %.6f over %lld predictions\n", args.split.c_str(), args.weight.c_str(),
              report.test_metric, static_cast<long long>(r.predictions));
  return 0;
}

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_verify(const VerifyArgs& args, const std::vector<std::string>& argv) {
  std::vector<VerifyResult> results;
  const bool all = args.suite == "all";
  if (all || args.suite == "dynamics-oracle") results.push_back(verify_dynamics_oracle(args.seed));
  if (all || args.suite == "loss-oracle") results.push_back(verify_loss_oracle(args.seed));
  if (all || args.suite == "gradcheck") results.push_back(verify_gradcheck(args.seed));
  bool ok = true;
  Json report = Json::array();
  for (const auto& r : results) {
    std::printf("%s %s worst=%.3g tol=%.3g %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.worst, r.tolerance,
                r.detail.c_str());
    ok = ok && r.passed;
    report.push_back({{"suite", r.name}, {"passed", r.passed}, {"worst", r.worst}, {"tolerance", r.tolerance}});
  }
  if (!args.out.empty()) {
    const fs::path out(args.out);
    fs::create_directories(out);
    write_file(out / "verify.json", report.dump(2) + "\n");
    write_manifest(out, "verify", argv, "", args.seed, Json{{"suite", args.suite}});
  }
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time graph forecasting for irregular time series"};
  app.require_subcommand(1);
  const std::vector<std::string> args_copy(argv, argv + argc);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write the synthetic periodic dataset");
  generate->add_option("--seed", gen.config.seed, "Master seed");
  generate->add_option("--out", gen.out, "Output dataset directory")->required();
  generate->add_option("--num-nodes", gen.config.num_nodes);
  generate->add_option("--train", gen.config.train, "Training sequences");
  generate->add_option("--val", gen.config.val, "Validation sequences");
  generate->add_option("--test", gen.config.test, "Test sequences");
  generate->add_option("--times", gen.config.times_per_sequence, "Observation times per sequence");
  generate->add_option("--grid", gen.config.grid, "Grid points on [0, 1]");
  generate->add_option("--obs-fraction", gen.config.obs_fraction, "Fraction of node observations kept");
  generate->add_option("--lag", gen.config.lag);
  generate->add_option("--noise-std", gen.config.noise_std);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and report test metrics");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--model", tr.model, "tgnn4i | grud-node | grud-joint | predict-prev");
  train_cmd->add_option("--dynamics", tr.dynamics, "static | exponential | periodic");
  train_cmd->add_option("--config", tr.config_file, "Flat JSON config; flags override it");
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--weight", tr.weight, "Training weighting w1 | w2 | w3 | w4");
  train_cmd->add_option("--latent-dim", tr.latent_dim);
  train_cmd->add_option("--max-epochs", tr.max_epochs);
  train_cmd->add_option("--patience", tr.patience);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--lr", tr.learning_rate);
  train_cmd->add_option("--workers", tr.workers, "Parallel sequence evaluations");
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch lines");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (or predict-prev) on a split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory or 'predict-prev'")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  eval_cmd->add_option("--weight", ev.weight, "w1 | w2 | w3 | w4");
  eval_cmd->add_option("--split", ev.split, "train | val | test");
  eval_cmd->add_option("--workers", ev.workers);

  VerifyArgs vf;
  auto* verify = app.add_subcommand("verify", "Run self-check suites");
  verify->add_option("--suite", vf.suite, "gradcheck | dynamics-oracle | loss-oracle | all")
      ->check(CLI::IsMember({"gradcheck", "dynamics-oracle", "loss-oracle", "all"}));
  verify->add_option("--seed", vf.seed);
  verify->add_option("--out", vf.out, "Optional report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(gen, args_copy);
    if (*train_cmd) return cmd_train(tr, args_copy);
    if (*eval_cmd) return cmd_eval(ev, args_copy);
    if (*verify) return cmd_verify(vf, args_copy);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const GraphError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const SequenceError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
