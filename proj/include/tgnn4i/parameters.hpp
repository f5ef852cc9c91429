#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tgnn4i/autodiff.hpp"

namespace tgnn4i {

using Index = Eigen::Index;

/// Handle into a ParameterStore; stable for the store's lifetime.
struct ParamId {
  std::size_t index = 0;
};

/// Named, ordered collection of learnable matrices with gradient slots.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
  };

  ParamId add(std::string name, Eigen::MatrixXd value);

  std::size_t size() const { return entries_.size(); }
  Index num_scalars() const;

  Entry& operator[](ParamId id) { return entries_.at(id.index); }
  const Entry& operator[](ParamId id) const { return entries_.at(id.index); }
  Entry& at(std::size_t i) { return entries_.at(i); }
  const Entry& at(std::size_t i) const { return entries_.at(i); }

  /// Lookup by name; throws std::out_of_range when absent.
  ParamId find(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();

  /// Copy values from `other`; names and shapes must match exactly.
  void assign_values(const ParameterStore& other);

  // Snapshots: {name -> {shape: [r, c], values: [row-major]}}.
  std::string to_json_string() const;
  static ParameterStore from_json_string(const std::string& text);
  void save_json(const std::filesystem::path& path) const;
  static ParameterStore load_json(const std::filesystem::path& path);

  // Little-endian binary: "TGNP" magic, u64 count, then per entry
  // u32 name length, name bytes, u64 rows, u64 cols, row-major f64 values.
  void save_binary(const std::filesystem::path& path) const;
  static ParameterStore load_binary(const std::filesystem::path& path);

 private:
  std::vector<Entry> entries_;
};

/// Parameters of a ParameterStore bound as leaves on one tape.
class BoundParameters {
 public:
  BoundParameters() = default;
  BoundParameters(ad::Tape& tape, const ParameterStore& store);

  ad::Var operator[](ParamId id) const { return vars_.at(id.index); }
  ad::Tape& tape() const { return *tape_; }

  /// Add the tape gradients (times `weight`) into the store's grad slots.
  void accumulate_into(ParameterStore& store, double weight = 1.0) const;

 private:
  ad::Tape* tape_ = nullptr;
  std::vector<ad::Var> vars_;
};

}  // namespace tgnn4i
