#include "tgnn4i/parameters.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tgnn4i {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");

ParamId ParameterStore::add(std::string name, Eigen::MatrixXd value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Entry e;
  e.name = std::move(name);
  e.grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  e.value = std::move(value);
  entries_.push_back(std::move(e));
  return ParamId{entries_.size() - 1};
}

Index ParameterStore::num_scalars() const {
  Index n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

ParamId ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return ParamId{i};
  throw std::out_of_range("no parameter named " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.grad.setZero(e.value.rows(), e.value.cols());
}

void ParameterStore::assign_values(const ParameterStore& other) {
  if (other.size() != size()) throw std::invalid_argument("parameter count mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& src = other.entries_[i];
    auto& dst = entries_[i];
    if (src.name != dst.name || src.value.rows() != dst.value.rows() || src.value.cols() != dst.value.cols()) {
      throw std::invalid_argument("parameter mismatch at " + dst.name);
    }
    dst.value = src.value;
  }
}

std::string ParameterStore::to_json_string() const {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& e : entries_) {
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (Index r = 0; r < e.value.rows(); ++r)
      for (Index c = 0; c < e.value.cols(); ++c) values.push_back(e.value(r, c));
    root[e.name] = {{"shape", {e.value.rows(), e.value.cols()}}, {"values", std::move(values)}};
  }
  return root.dump(1);
}

ParameterStore ParameterStore::from_json_string(const std::string& text) {
  const auto root = nlohmann::ordered_json::parse(text);
  if (!root.is_object()) throw std::runtime_error("parameter snapshot: expected a JSON object");
  ParameterStore store;
  for (const auto& [name, item] : root.items()) {
    const auto& shape = item.at("shape");
    const auto& values = item.at("values");
    if (!shape.is_array() || shape.size() != 2) throw std::runtime_error("parameter snapshot: bad shape for " + name);
    const Index rows = shape[0].get<Index>();
    const Index cols = shape[1].get<Index>();
    if (rows < 0 || cols < 0 || static_cast<Index>(values.size()) != rows * cols) {
      throw std::runtime_error("parameter snapshot: value count does not match shape for " + name);
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = values[k++].get<double>();
    store.add(name, std::move(m));
  }
  return store;
}

void ParameterStore::save_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json_string() << '\n';
}

ParameterStore ParameterStore::load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

namespace {

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("parameter snapshot: truncated binary file");
  return v;
}

constexpr char kMagic[4] = {'T', 'G', 'N', 'P'};

}  // namespace

void ParameterStore::save_binary(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, 4);
  write_pod<std::uint64_t>(out, entries_.size());
  for (const auto& e : entries_) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.rows()));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.cols()));
    for (Index r = 0; r < e.value.rows(); ++r)
      for (Index c = 0; c < e.value.cols(); ++c) write_pod<double>(out, e.value(r, c));
  }
}

ParameterStore ParameterStore::load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("parameter snapshot: bad magic");
  const auto count = read_pod<std::uint64_t>(in);
  ParameterStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = static_cast<Index>(read_pod<std::uint64_t>(in));
    const auto cols = static_cast<Index>(read_pod<std::uint64_t>(in));
    Eigen::MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = read_pod<double>(in);
    store.add(std::move(name), std::move(m));
  }
  return store;
}

BoundParameters::BoundParameters(ad::Tape& tape, const ParameterStore& store) : tape_(&tape) {
  vars_.reserve(store.size());
  for (const auto& e : store.entries()) vars_.push_back(tape.variable(e.value));
}

void BoundParameters::accumulate_into(ParameterStore& store, double weight) const {
  if (vars_.size() != store.size()) throw std::invalid_argument("bound parameters do not match store");
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto& e = store.at(i);
    if (e.grad.rows() != e.value.rows() || e.grad.cols() != e.value.cols()) e.grad.setZero(e.value.rows(), e.value.cols());
    e.grad += weight * tape_->grad(vars_[i]);
  }
}

}  // namespace tgnn4i
