#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kRoot = fs::temp_directory_path() / "tgnn4i_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(TGNN4I_CLI_PATH) + " " + args + " >" + (kRoot / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSmall = "--num-nodes 6 --train 4 --val 2 --test 2 --times 20 --grid 200";

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    ASSERT_EQ(run(std::string("generate --seed 5 --out ") + (kRoot / "data").string() + " " + kSmall), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(kRoot); }
};

TEST_F(Cli, GenerateIsByteIdenticalForTheSameSeed) {
  ASSERT_EQ(run(std::string("generate --seed 5 --out ") + (kRoot / "again").string() + " " + kSmall), 0);
  ASSERT_EQ(run(std::string("generate --seed 6 --out ") + (kRoot / "other").string() + " " + kSmall), 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(kRoot / "data")) {
    const auto name = e.path().filename();
    if (name == "run_manifest.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(kRoot / "again" / name)) << name;
    ++files;
  }
  EXPECT_EQ(files, 2u + 8u);  // graph, meta, one file per sequence
  EXPECT_NE(slurp(kRoot / "data" / "seq_0.csv"), slurp(kRoot / "other" / "seq_0.csv"));
}

TEST_F(Cli, TrainThenEvalReproducesTheTestMetric) {
  const auto out = kRoot / "run";
  ASSERT_EQ(run("train --quiet --data " + (kRoot / "data").string() + " --out " + out.string() +
                " --model tgnn4i --dynamics exponential --latent-dim 4 --max-epochs 2 --seed 1"),
            0)
      << slurp(kRoot / "last.log");
  for (const char* f : {"metrics.json", "bins.csv", "effective_config.json", "run_manifest.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_TRUE(fs::exists(out / "checkpoint" / "parameters.json"));

  const auto trained = nlohmann::json::parse(slurp(out / "metrics.json"));
  ASSERT_EQ(run("eval --checkpoint " + (out / "checkpoint").string() + " --data " + (kRoot / "data").string() +
                " --out " + (kRoot / "eval").string()),
            0)
      << slurp(kRoot / "last.log");
  const auto evaluated = nlohmann::json::parse(slurp(kRoot / "eval" / "metrics.json"));
  EXPECT_NEAR(evaluated.at("test_metric").get<double>(), trained.at("test_metric").get<double>(), 1e-12);

  const auto manifest = nlohmann::json::parse(slurp(out / "run_manifest.json"));
  EXPECT_EQ(manifest.at("command"), "train");
  EXPECT_TRUE(manifest.contains("artifacts"));
}

TEST_F(Cli, TrainIsDeterministic) {
  const std::string base = "train --quiet --data " + (kRoot / "data").string() +
                           " --model grud-node --dynamics periodic --latent-dim 4 --max-epochs 2 --seed 3 --out ";
  ASSERT_EQ(run(base + (kRoot / "d1").string()), 0);
  ASSERT_EQ(run(base + (kRoot / "d2").string()), 0);
  auto a = nlohmann::json::parse(slurp(kRoot / "d1" / "metrics.json"));
  auto b = nlohmann::json::parse(slurp(kRoot / "d2" / "metrics.json"));
  a.erase("wall_clock_seconds");
  b.erase("wall_clock_seconds");
  EXPECT_EQ(a, b);
  EXPECT_EQ(slurp(kRoot / "d1" / "checkpoint" / "parameters.json"), slurp(kRoot / "d2" / "checkpoint" / "parameters.json"));
}

TEST_F(Cli, ConfigFileIsAppliedAndFlagsOverrideIt) {
  const auto cfg = kRoot / "cfg.json";
  std::ofstream(cfg) << R"({"model": "grud-node", "latent_dim": 4, "max_epochs": 1, "batch_size": 2})";
  ASSERT_EQ(run("train --quiet --data " + (kRoot / "data").string() + " --out " + (kRoot / "cfg_run").string() +
                " --config " + cfg.string() + " --batch-size 3"),
            0)
      << slurp(kRoot / "last.log");
  const auto eff = nlohmann::json::parse(slurp(kRoot / "cfg_run" / "effective_config.json"));
  EXPECT_EQ(eff.at("model"), "grud-node");
  EXPECT_EQ(eff.at("batch_size"), 3);
  EXPECT_EQ(eff.at("latent_dim"), 4);
}

TEST_F(Cli, PredictPreviousEval) {
  EXPECT_EQ(run("eval --checkpoint predict-prev --data " + (kRoot / "data").string() + " --out " +
                (kRoot / "pp").string()),
            0);
  EXPECT_GT(nlohmann::json::parse(slurp(kRoot / "pp" / "metrics.json")).at("test_metric").get<double>(), 0.0);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("generate"), 1);                                                       // missing --out
  EXPECT_EQ(run("generate --out " + (kRoot / "x").string() + " --obs-fraction 2"), 1);  // invalid config
  EXPECT_EQ(run("train --data /nonexistent/dir --out " + (kRoot / "y").string()), 2);
  EXPECT_EQ(run("train --data " + (kRoot / "data").string() + " --out " + (kRoot / "z").string() +
                " --model lstm"),
            1);
  const auto bad_cfg = kRoot / "bad.json";
  std::ofstream(bad_cfg) << R"({"no_such_key": 1})";
  EXPECT_EQ(run("train --data " + (kRoot / "data").string() + " --out " + (kRoot / "z").string() + " --config " +
                bad_cfg.string()),
            1);
  EXPECT_EQ(run("eval --checkpoint /nonexistent --data " + (kRoot / "data").string() + " --out " +
                (kRoot / "w").string()),
            2);
  // A dataset whose sequence file is corrupt is a data error.
  fs::copy(kRoot / "data", kRoot / "corrupt", fs::copy_options::recursive);
  std::ofstream(kRoot / "corrupt" / "seq_0.csv") << "t,node,observed,y_0\n0.1,0,1,oops\n";
  EXPECT_EQ(run("train --data " + (kRoot / "corrupt").string() + " --out " + (kRoot / "v").string()), 2);
  EXPECT_NE(slurp(kRoot / "last.log").find("seq_0.csv"), std::string::npos);
}

TEST_F(Cli, DivergenceExitsWithThree) {
  EXPECT_EQ(run("train --quiet --data " + (kRoot / "data").string() + " --out " + (kRoot / "div").string() +
                " --model grud-node --latent-dim 4 --max-epochs 3 --lr 1e300"),
            3)
      << slurp(kRoot / "last.log");
}

TEST_F(Cli, VerifyLossOracle) {
  EXPECT_EQ(run("verify --suite loss-oracle --out " + (kRoot / "verify").string()), 0);
  EXPECT_TRUE(fs::exists(kRoot / "verify" / "verify.json"));
  EXPECT_EQ(run("verify --suite nonsense"), 1);
}

}  // namespace
