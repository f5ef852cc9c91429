#include "tgnn4i/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include "json.hpp"
#include <numeric>
#include <sstream>

namespace tgnn4i {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Keeps the observed rows of `seq` listed in `steps` (ascending).
ObservationSequence select_steps(const ObservationSequence& seq, const std::vector<Index>& steps) {
  Eigen::VectorXd times(static_cast<Index>(steps.size()));
  for (std::size_t i = 0; i < steps.size(); ++i) times(static_cast<Index>(i)) = seq.times(steps[i]);
  ObservationSequence out(times, seq.num_nodes(), seq.value_dim(), seq.feature_dim());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto s = static_cast<std::size_t>(steps[i]);
    out.mask.row(static_cast<Index>(i)) = seq.mask.row(steps[i]);
    out.values[i] = seq.values[s];
    out.features[i] = seq.features[s];
  }
  return out;
}

}  // namespace

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

ObservationSequence irregularize(const ObservationSequence& regular, Index keep_times, double obs_fraction,
                                 std::mt19937_64& rng) {
  const Index steps = regular.num_steps(), nodes = regular.num_nodes();
  if (keep_times < 1 || keep_times > steps)
    throw DataError("irregularize: keep-times must lie in [1, " + std::to_string(steps) + "]");
  if (!(obs_fraction > 0.0 && obs_fraction <= 1.0)) throw DataError("irregularize: observation fraction must lie in (0, 1]");
  if (!regular.mask.all()) throw DataError("irregularize: input must be fully observed");

  std::vector<Index> steps_idx(static_cast<std::size_t>(steps));
  std::iota(steps_idx.begin(), steps_idx.end(), Index{0});
  std::shuffle(steps_idx.begin(), steps_idx.end(), rng);
  steps_idx.resize(static_cast<std::size_t>(keep_times));
  std::sort(steps_idx.begin(), steps_idx.end());
  ObservationSequence kept = select_steps(regular, steps_idx);

  const Index total = keep_times * nodes;
  const auto keep_obs = static_cast<Index>(std::llround(obs_fraction * static_cast<double>(total)));
  if (keep_obs < 1) throw DataError("irregularize: observation fraction leaves the sequence empty");
  std::vector<Index> pairs(static_cast<std::size_t>(total));
  std::iota(pairs.begin(), pairs.end(), Index{0});
  std::shuffle(pairs.begin(), pairs.end(), rng);
  Mask keep = Mask::Constant(keep_times, nodes, false);
  for (Index i = 0; i < keep_obs; ++i) {
    const Index p = pairs[static_cast<std::size_t>(i)];
    keep(p / nodes, p % nodes) = true;
  }
  for (Index s = 0; s < keep_times; ++s) {
    auto& y = kept.values[static_cast<std::size_t>(s)];
    auto& x = kept.features[static_cast<std::size_t>(s)];
    for (Index n = 0; n < nodes; ++n) {
      if (keep(s, n)) continue;
      kept.mask(s, n) = false;
      y.row(n).setZero();
      x.row(n).setZero();
    }
  }
  std::vector<Index> nonempty;
  for (Index s = 0; s < keep_times; ++s)
    if (kept.mask.row(s).any()) nonempty.push_back(s);
  if (nonempty.empty()) throw DataError("irregularize: sequence lost every observation");
  if (static_cast<Index>(nonempty.size()) == keep_times) return kept;
  return select_steps(kept, nonempty);
}

ObservationSequence rescale_time(const ObservationSequence& seq, double span) {
  if (!(span > 0.0) || !std::isfinite(span)) throw DataError("rescale_time: span must be positive");
  ObservationSequence out = seq;
  out.times /= span;
  return out;
}

ObservationSequence add_standard_features(const ObservationSequence& seq, FeatureKind kind, double day_length) {
  if (kind == FeatureKind::TimeOfDayAndStaleness && !(day_length > 0.0))
    throw DataError("features: day length must be positive");
  const Index nodes = seq.num_nodes(), dx = seq.feature_dim();
  const Index extra = kind == FeatureKind::TimeOfDayAndStaleness ? 2 : 1;
  ObservationSequence out = seq;
  Eigen::VectorXd last = Eigen::VectorXd::Zero(nodes);
  for (Index s = 0; s < seq.num_steps(); ++s) {
    const auto i = static_cast<std::size_t>(s);
    const double t = seq.times(s);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(nodes, dx + extra);
    x.leftCols(dx) = seq.features[i];
    for (Index n = 0; n < nodes; ++n) {
      if (!seq.mask(s, n)) continue;
      Index c = dx;
      if (kind == FeatureKind::TimeOfDayAndStaleness) x(n, c++) = std::fmod(t, day_length) / day_length;
      x(n, c) = t - last(n);
      last(n) = t;
    }
    out.features[i] = std::move(x);
  }
  return out;
}

DatasetSplit split_dataset(std::vector<ObservationSequence> sequences, const GraphTopology& graph, double train_ratio,
                           double val_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0) || !(val_ratio > 0.0) || !(train_ratio + val_ratio < 1.0))
    throw DataError("split: ratios must be positive and leave room for a test split");
  const auto n = static_cast<Index>(sequences.size());
  const auto n_train = static_cast<Index>(std::llround(train_ratio * static_cast<double>(n)));
  const auto n_val = static_cast<Index>(std::llround(val_ratio * static_cast<double>(n)));
  if (n_train < 1 || n_val < 1 || n - n_train - n_val < 1)
    throw DataError("split: " + std::to_string(n) + " sequences are too few for nonempty splits");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  auto rng = stream_rng(seed, 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  DatasetSplit split;
  split.graph = graph;
  if (!sequences.empty()) {
    split.value_dim = sequences.front().value_dim();
    split.feature_dim = sequences.front().feature_dim();
  }
  for (Index i = 0; i < n; ++i) {
    auto& seq = sequences[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    auto& part = i < n_train ? split.train : (i < n_train + n_val ? split.val : split.test);
    part.push_back(std::move(seq));
  }
  split.validate();
  return split;
}

// ---------------------------------------------------------------------------

namespace {

void write_sequence(const ObservationSequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t,node,observed";
  for (Index k = 0; k < seq.value_dim(); ++k) out << ",y_" << k;
  for (Index k = 0; k < seq.feature_dim(); ++k) out << ",x_" << k;
  out << '\n';
  for (Index s = 0; s < seq.num_steps(); ++s) {
    const std::string t = format_double(seq.times(s));
    const auto& y = seq.values[static_cast<std::size_t>(s)];
    const auto& x = seq.features[static_cast<std::size_t>(s)];
    for (Index n = 0; n < seq.num_nodes(); ++n) {
      if (!seq.mask(s, n)) continue;
      out << t << ',' << n << ",1";
      for (Index k = 0; k < y.cols(); ++k) out << ',' << format_double(y(n, k));
      for (Index k = 0; k < x.cols(); ++k) out << ',' << format_double(x(n, k));
      out << '\n';
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

double parse_number(const std::string& field, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse number '" + field + "'");
  }
}

ObservationSequence read_sequence(const std::filesystem::path& path, Index nodes, Index dy, Index dx) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  std::string expected = "t,node,observed";
  for (Index k = 0; k < dy; ++k) expected += ",y_" + std::to_string(k);
  for (Index k = 0; k < dx; ++k) expected += ",x_" + std::to_string(k);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) throw DataError(path.string() + ":1: header must be '" + expected + "'");

  struct Row {
    Index node;
    Eigen::RowVectorXd y, x;
  };
  std::vector<double> times;
  std::vector<std::vector<Row>> steps;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (static_cast<Index>(fields.size()) != 3 + dy + dx)
      throw DataError(where + ": expected " + std::to_string(3 + dy + dx) + " fields");
    const double t = parse_number(fields[0], where);
    const double node_d = parse_number(fields[1], where);
    const double observed = parse_number(fields[2], where);
    if (node_d != std::floor(node_d) || node_d < 0 || node_d >= static_cast<double>(nodes))
      throw DataError(where + ": node id out of range");
    if (observed != 0.0 && observed != 1.0) throw DataError(where + ": observed flag must be 0 or 1");
    Row row{static_cast<Index>(node_d), Eigen::RowVectorXd(dy), Eigen::RowVectorXd(dx)};
    for (Index k = 0; k < dy; ++k) row.y(k) = parse_number(fields[static_cast<std::size_t>(3 + k)], where);
    for (Index k = 0; k < dx; ++k) row.x(k) = parse_number(fields[static_cast<std::size_t>(3 + dy + k)], where);
    if (observed == 0.0) {
      if (!row.y.isZero(0.0) || !row.x.isZero(0.0)) throw DataError(where + ": unobserved entry carries data");
      continue;
    }
    if (times.empty() || t != times.back()) {
      if (!times.empty() && !(t > times.back())) throw DataError(where + ": times are not sorted");
      times.push_back(t);
      steps.emplace_back();
    }
    steps.back().push_back(std::move(row));
  }
  if (times.empty()) throw DataError(path.string() + ": no observations");
  ObservationSequence seq(Eigen::Map<Eigen::VectorXd>(times.data(), static_cast<Index>(times.size())), nodes, dy, dx);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (const auto& row : steps[s]) {
      if (seq.mask(static_cast<Index>(s), row.node))
        throw DataError(path.string() + ": node " + std::to_string(row.node) + " repeated at one time");
      seq.mask(static_cast<Index>(s), row.node) = true;
      seq.values[s].row(row.node) = row.y;
      seq.features[s].row(row.node) = row.x;
    }
  }
  try {
    seq.validate();
  } catch (const SequenceError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return seq;
}

nlohmann::json read_meta(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw DataError("cannot read " + (dir / "meta.json").string());
  try {
    nlohmann::json meta;
    in >> meta;
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
}

}  // namespace

void save_dataset(const DatasetSplit& data, const std::filesystem::path& dir, std::uint64_t seed,
                  const std::string& extra_json) {
  data.validate();
  std::filesystem::create_directories(dir);
  save_edge_csv(data.graph, dir / "graph.csv");
  nlohmann::ordered_json meta;
  meta["num_nodes"] = data.graph.num_nodes();
  meta["value_dim"] = data.value_dim;
  meta["feature_dim"] = data.feature_dim;
  meta["seed"] = seed;
  std::size_t id = 0;
  nlohmann::ordered_json splits;
  for (const auto& [name, part] : {std::pair{"train", &data.train}, {"val", &data.val}, {"test", &data.test}}) {
    std::vector<std::size_t> ids;
    for (const auto& seq : *part) {
      write_sequence(seq, dir / ("seq_" + std::to_string(id) + ".csv"));
      ids.push_back(id++);
    }
    splits[name] = ids;
  }
  meta["splits"] = splits;
  meta["generator"] = nlohmann::ordered_json::parse(extra_json);
  std::ofstream out(dir / "meta.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
}

DatasetSplit load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory " + dir.string() + " does not exist");
  const nlohmann::json meta = read_meta(dir);
  DatasetSplit data;
  try {
    const Index nodes = meta.at("num_nodes").get<Index>();
    data.value_dim = meta.at("value_dim").get<Index>();
    data.feature_dim = meta.at("feature_dim").get<Index>();
    try {
      data.graph = load_edge_csv(dir / "graph.csv", nodes);
    } catch (const GraphError& e) {
      throw DataError(e.what());
    }
    const auto& splits = meta.at("splits");
    for (const auto& [name, part] :
         {std::pair{"train", &data.train}, {"val", &data.val}, {"test", &data.test}}) {
      for (const auto& id : splits.at(name)) {
        part->push_back(read_sequence(dir / ("seq_" + std::to_string(id.get<std::size_t>()) + ".csv"), nodes,
                                      data.value_dim, data.feature_dim));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
  try {
    data.validate();
  } catch (const SequenceError& e) {
    throw DataError(e.what());
  }
  return data;
}

std::uint64_t dataset_seed(const std::filesystem::path& dir) {
  try {
    return read_meta(dir).at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
}

}  // namespace tgnn4i
