#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tgnn4i/sequence.hpp"

namespace tgnn4i {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Independent generator for stream `stream` of a 64-bit master seed; the
/// streams do not depend on how many draws other streams make.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream);

/// Keeps a sorted uniform subset of `keep_times` time indices, then
/// round(p * keep_times * |V|) node observations drawn uniformly from the
/// kept grid. Rows left without observations are dropped. Retained values
/// are copied bit for bit.
ObservationSequence irregularize(const ObservationSequence& regular, Index keep_times, double obs_fraction,
                                 std::mt19937_64& rng);

/// Divides all times by `span` (the original grid span).
ObservationSequence rescale_time(const ObservationSequence& seq, double span);

enum class FeatureKind { TimeOfDayAndStaleness, StalenessOnly };

/// Appends feature columns on observed entries: time of day
/// (fmod(t, day_length) / day_length) when requested, then staleness
/// t_i - t_last(n), with t_last = 0 before a node's first observation.
ObservationSequence add_standard_features(const ObservationSequence& seq, FeatureKind kind, double day_length = 1.0);

/// Random partition: round(ratio * n) sequences to train and validation,
/// the rest to test. Every part must end up nonempty.
DatasetSplit split_dataset(std::vector<ObservationSequence> sequences, const GraphTopology& graph, double train_ratio,
                           double val_ratio, std::uint64_t seed);

/// Directory layout: graph.csv, meta.json and seq_<id>.csv with header
/// `t,node,observed,y_0..,x_0..` (observed entries only). `extra` is merged
/// into meta.json under "generator".
void save_dataset(const DatasetSplit& data, const std::filesystem::path& dir, std::uint64_t seed,
                  const std::string& extra_json = "{}");
DatasetSplit load_dataset(const std::filesystem::path& dir);

/// Seed recorded in meta.json.
std::uint64_t dataset_seed(const std::filesystem::path& dir);

}  // namespace tgnn4i
