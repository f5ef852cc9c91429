#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "tgnn4i/dataset.hpp"
#include "tgnn4i/synthetic.hpp"

namespace tgnn4i {
namespace {

namespace fs = std::filesystem;

SyntheticConfig small_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.seed = seed;
  c.num_nodes = 8;
  c.train = 4;
  c.val = 2;
  c.test = 2;
  c.times_per_sequence = 30;
  c.grid = 200;
  c.lag = 0.05;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

TEST(Synthetic, CleanSignalSatisfiesTheLaggedRecursion) {
  const GraphTopology g(4, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  Eigen::VectorXd freq(4), phase(4);
  freq << 20.0, 35.0, 60.0, 99.0;
  phase << 0.1, 2.0, 4.0, 5.5;
  const Index grid = 100, lag = 5;
  const Eigen::MatrixXd s = synthetic_clean_signal(g, freq, phase, grid, lag);
  ASSERT_EQ(s.rows(), grid + 1);
  double worst = 0.0;
  for (Index k = 0; k <= grid; ++k) {
    const double t = static_cast<double>(k) / grid;
    for (Index n = 0; n < 4; ++n) {
      double parents = 0.0;
      const auto nb = g.in_neighbors(n);
      for (const auto& m : nb) parents += k >= lag ? s(k - lag, m.source) : 0.0;
      if (!nb.empty()) parents *= 0.5 / static_cast<double>(nb.size());
      worst = std::max(worst, std::abs(s(k, n) - std::sin(freq(n) * t + phase(n)) - parents));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Synthetic, ShapesAndCounts) {
  const SyntheticConfig c = small_config(3);
  const SyntheticDataset d = generate_synthetic(c);
  EXPECT_EQ(d.split.train.size(), 4u);
  EXPECT_EQ(d.split.val.size(), 2u);
  EXPECT_EQ(d.split.test.size(), 2u);
  EXPECT_TRUE(is_acyclic(d.split.graph));
  EXPECT_EQ(d.split.graph.num_nodes(), 8);
  EXPECT_TRUE((d.frequencies.array() >= 20.0).all() && (d.frequencies.array() <= 100.0).all());
  for (const auto& seq : d.split.train) {
    EXPECT_LE(seq.num_steps(), 30);
    EXPECT_EQ(seq.total_observations(), 120);  // round(0.5 * 30 * 8)
    EXPECT_GT(seq.times(0), 0.0);
    EXPECT_LE(seq.times(seq.num_steps() - 1), 1.0);
    for (Index i = 0; i < seq.num_steps(); ++i) {
      const double k = seq.times(i) * 200.0;
      EXPECT_NEAR(k, std::round(k), 1e-9);
    }
    EXPECT_NO_THROW(seq.validate());
  }
}

TEST(Synthetic, NoiseIsGaussianWithTheConfiguredSpread) {
  // The normal draws consume the same underlying samples for any spread, so a
  // noiseless twin isolates the noise exactly.
  SyntheticConfig noisy = small_config(4);
  noisy.train = 20;
  noisy.times_per_sequence = 100;
  SyntheticConfig clean = noisy;
  clean.noise_std = 0.0;
  const SyntheticDataset a = generate_synthetic(noisy);
  const SyntheticDataset b = generate_synthetic(clean);
  double sum = 0.0, sum2 = 0.0;
  Index count = 0;
  for (std::size_t i = 0; i < a.split.train.size(); ++i) {
    const auto& sa = a.split.train[i];
    const auto& sb = b.split.train[i];
    ASSERT_EQ(sa.times, sb.times);
    ASSERT_TRUE((sa.mask == sb.mask).all());
    for (Index s = 0; s < sa.num_steps(); ++s)
      for (Index n = 0; n < sa.num_nodes(); ++n) {
        if (!sa.mask(s, n)) continue;
        const double e = sa.values[s](n, 0) - sb.values[s](n, 0);
        sum += e;
        sum2 += e * e;
        ++count;
      }
  }
  const double mean = sum / count, var = sum2 / count - mean * mean;
  EXPECT_NEAR(mean, 0.0, 5e-4);
  EXPECT_NEAR(var, 1e-4, 1e-5);
}

TEST(Synthetic, SameSeedSameData) {
  const SyntheticDataset a = generate_synthetic(small_config(9));
  const SyntheticDataset b = generate_synthetic(small_config(9));
  const SyntheticDataset c = generate_synthetic(small_config(10));
  EXPECT_EQ(a.split.graph, b.split.graph);
  EXPECT_EQ(a.split.train, b.split.train);
  EXPECT_EQ(a.split.test, b.split.test);
  EXPECT_FALSE(a.split.train == c.split.train);
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig c = small_config(1);
  c.lag = 0.0525;
  EXPECT_THROW(c.validate(), DataError);
  c = small_config(1);
  c.times_per_sequence = 500;
  EXPECT_THROW(c.validate(), DataError);
  c = small_config(1);
  c.obs_fraction = 0.0;
  EXPECT_THROW(c.validate(), DataError);
}

ObservationSequence regular_sequence(Index steps, Index nodes, std::mt19937_64& rng) {
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(steps, 1.0, static_cast<double>(steps));
  ObservationSequence seq(times, nodes, 2, 1);
  seq.mask.setConstant(true);
  std::normal_distribution<double> normal;
  for (Index s = 0; s < steps; ++s) {
    for (Index i = 0; i < seq.values[s].size(); ++i) seq.values[s].data()[i] = normal(rng);
    for (Index i = 0; i < seq.features[s].size(); ++i) seq.features[s].data()[i] = normal(rng);
  }
  return seq;
}

TEST(Irregularize, KeepsTheRequestedCountsAndCopiesValues) {
  std::mt19937_64 rng(61);
  const ObservationSequence full = regular_sequence(50, 6, rng);
  for (double p : {0.05, 0.3, 1.0}) {
    const ObservationSequence irr = irregularize(full, 20, p, rng);
    EXPECT_EQ(irr.total_observations(), static_cast<Index>(std::llround(p * 20 * 6)));
    EXPECT_LE(irr.num_steps(), 20);
    EXPECT_NO_THROW(irr.validate());
    for (Index s = 0; s < irr.num_steps(); ++s) {
      const Index k = static_cast<Index>(irr.times(s)) - 1;
      EXPECT_EQ(full.times(k), irr.times(s));
      for (Index n = 0; n < 6; ++n) {
        if (irr.mask(s, n)) {
          EXPECT_EQ(irr.values[s].row(n), full.values[k].row(n));
          EXPECT_EQ(irr.features[s].row(n), full.features[k].row(n));
        } else {
          EXPECT_TRUE(irr.values[s].row(n).isZero(0.0));
        }
      }
    }
  }
  EXPECT_THROW(irregularize(full, 51, 0.5, rng), DataError);
  EXPECT_THROW(irregularize(full, 10, 1.5, rng), DataError);
}

TEST(Features, StalenessAndTimeOfDay) {
  Eigen::VectorXd times(3);
  times << 0.5, 1.25, 2.0;
  ObservationSequence seq(times, 2, 1, 0);
  seq.mask << true, false, true, true, false, true;
  const ObservationSequence out = add_standard_features(seq, FeatureKind::TimeOfDayAndStaleness, 1.0);
  ASSERT_EQ(out.feature_dim(), 2);
  EXPECT_DOUBLE_EQ(out.features[0](0, 1), 0.5);   // first observation: t - 0
  EXPECT_DOUBLE_EQ(out.features[1](0, 1), 0.75);
  EXPECT_DOUBLE_EQ(out.features[1](1, 1), 1.25);
  EXPECT_DOUBLE_EQ(out.features[2](1, 1), 0.75);
  EXPECT_DOUBLE_EQ(out.features[1](0, 0), 0.25);  // time of day
  EXPECT_EQ(out.features[0](1, 0), 0.0);          // unobserved stays zero
  EXPECT_NO_THROW(out.validate());
  EXPECT_EQ(add_standard_features(seq, FeatureKind::StalenessOnly).feature_dim(), 1);
}

TEST(Split, RatiosAndDisjointness) {
  std::mt19937_64 rng(62);
  std::vector<ObservationSequence> seqs;
  for (int i = 0; i < 10; ++i) {
    ObservationSequence s = regular_sequence(3, 2, rng);
    s.times.array() += i * 100.0;  // tag each sequence by its first time
    seqs.push_back(s);
  }
  const GraphTopology g(2, {{0, 1, 1.0}});
  const DatasetSplit split = split_dataset(seqs, g, 0.7, 0.1, 5);
  EXPECT_EQ(split.train.size(), 7u);
  EXPECT_EQ(split.val.size(), 1u);
  EXPECT_EQ(split.test.size(), 2u);
  std::set<double> tags;
  for (const auto* part : {&split.train, &split.val, &split.test})
    for (const auto& s : *part) tags.insert(s.times(0));
  EXPECT_EQ(tags.size(), 10u);
  EXPECT_THROW(split_dataset(std::vector<ObservationSequence>(seqs.begin(), seqs.begin() + 3), g, 0.7, 0.1, 5),
               DataError);
}

TEST(DatasetIo, RoundTripIsExact) {
  const SyntheticDataset d = generate_synthetic(small_config(12));
  const fs::path dir = fresh_dir("tgnn4i_data_roundtrip");
  save_dataset(d.split, dir, 12);
  const DatasetSplit back = load_dataset(dir);
  EXPECT_EQ(back.graph, d.split.graph);
  EXPECT_EQ(back.train, d.split.train);
  EXPECT_EQ(back.val, d.split.val);
  EXPECT_EQ(back.test, d.split.test);
  EXPECT_EQ(dataset_seed(dir), 12u);
  fs::remove_all(dir);
}

TEST(DatasetIo, RoundTripWithFeatures) {
  std::mt19937_64 rng(63);
  std::vector<ObservationSequence> seqs;
  for (int i = 0; i < 5; ++i) seqs.push_back(irregularize(regular_sequence(12, 3, rng), 8, 0.6, rng));
  const DatasetSplit split = split_dataset(seqs, GraphTopology(3, {{0, 1, 0.25}, {2, 1, 1.0}}), 0.4, 0.2, 1);
  const fs::path dir = fresh_dir("tgnn4i_data_features");
  save_dataset(split, dir, 77, R"({"kind":"test"})");
  const DatasetSplit back = load_dataset(dir);
  EXPECT_EQ(back.feature_dim, 1);
  EXPECT_EQ(back.value_dim, 2);
  EXPECT_EQ(back.train, split.train);
  EXPECT_EQ(back.test, split.test);
  fs::remove_all(dir);
}

class LoaderRejects : public ::testing::TestWithParam<std::pair<const char*, const char*>> {};

TEST_P(LoaderRejects, MalformedSequenceFile) {
  const SyntheticDataset d = generate_synthetic(small_config(13));
  const fs::path dir = fresh_dir("tgnn4i_data_bad");
  save_dataset(d.split, dir, 13);
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().starts_with("seq_")) victim = e.path();
  std::ofstream(victim) << GetParam().second;
  try {
    load_dataset(dir);
    ADD_FAILURE() << "expected rejection: " << GetParam().first;
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(victim.filename().string()), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

INSTANTIATE_TEST_SUITE_P(
    Cases, LoaderRejects,
    ::testing::Values(std::make_pair("header", "time,node,observed,y_0\n0.1,0,1,0.5\n"),
                      std::make_pair("unsorted", "t,node,observed,y_0\n0.2,0,1,0.5\n0.1,1,1,0.5\n"),
                      std::make_pair("node range", "t,node,observed,y_0\n0.1,99,1,0.5\n"),
                      std::make_pair("bad number", "t,node,observed,y_0\n0.1,0,1,abc\n"),
                      std::make_pair("field count", "t,node,observed,y_0\n0.1,0,1\n"),
                      std::make_pair("unobserved data", "t,node,observed,y_0\n0.1,0,0,0.5\n"),
                      std::make_pair("repeated node", "t,node,observed,y_0\n0.1,0,1,0.5\n0.1,0,1,0.7\n"),
                      std::make_pair("empty", "t,node,observed,y_0\n")),
    [](const auto& info) {
      std::string s = info.param.first;
      std::replace(s.begin(), s.end(), ' ', '_');
      return s;
    });

TEST(DatasetIo, MissingDirectoryAndMeta) {
  EXPECT_THROW(load_dataset("/nonexistent/tgnn4i"), DataError);
  const fs::path dir = fresh_dir("tgnn4i_data_nometa");
  fs::create_directories(dir);
  EXPECT_THROW(load_dataset(dir), DataError);
  fs::remove_all(dir);
}

TEST(StreamRng, StreamsAreIndependentAndReproducible) {
  auto a = stream_rng(5, 0), b = stream_rng(5, 0), c = stream_rng(5, 1), d = stream_rng(6, 0);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

}  // namespace
}  // namespace tgnn4i
