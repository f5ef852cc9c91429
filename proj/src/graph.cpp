#include "tgnn4i/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "tgnn4i/hash.hpp"

namespace tgnn4i {

GraphTopology::GraphTopology(Index num_nodes, std::vector<Edge> edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
  if (num_nodes_ < 0) throw GraphError("negative node count");
  std::set<std::pair<Index, Index>> seen;
  std::vector<Index> degree(static_cast<std::size_t>(num_nodes_), 0);
  for (const auto& e : edges_) {
    if (e.source < 0 || e.source >= num_nodes_ || e.target < 0 || e.target >= num_nodes_) {
      throw GraphError("edge (" + std::to_string(e.source) + ", " + std::to_string(e.target) + ") out of range");
    }
    if (e.source == e.target) throw GraphError("self-loop at node " + std::to_string(e.source));
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw GraphError("edge (" + std::to_string(e.source) + ", " + std::to_string(e.target) +
                       ") has invalid weight");
    }
    if (!seen.emplace(e.source, e.target).second) {
      throw GraphError("duplicate edge (" + std::to_string(e.source) + ", " + std::to_string(e.target) + ")");
    }
    ++degree[static_cast<std::size_t>(e.target)];
  }
  offsets_.assign(static_cast<std::size_t>(num_nodes_) + 1, 0);
  for (Index n = 0; n < num_nodes_; ++n) offsets_[n + 1] = offsets_[n] + degree[n];
  neighbors_.resize(edges_.size());
  std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) neighbors_[fill[e.target]++] = Neighbor{e.source, e.weight};
}

std::span<const Neighbor> GraphTopology::in_neighbors(Index n) const {
  if (n < 0 || n >= num_nodes_) throw GraphError("node id " + std::to_string(n) + " out of range");
  return {neighbors_.data() + offsets_[n], static_cast<std::size_t>(offsets_[n + 1] - offsets_[n])};
}

std::uint64_t GraphTopology::checksum() const {
  Fnv1a h;
  h.add(static_cast<std::int64_t>(num_nodes_));
  for (const auto& e : edges_) {
    h.add(static_cast<std::int64_t>(e.source));
    h.add(static_cast<std::int64_t>(e.target));
    h.add(e.weight);
  }
  return h.value();
}

GraphTopology GraphTopology::permuted(std::span<const Index> perm) const {
  if (static_cast<Index>(perm.size()) != num_nodes_) throw GraphError("permutation size mismatch");
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.push_back({perm[e.source], perm[e.target], e.weight});
  return GraphTopology(num_nodes_, std::move(out));
}

GraphTopology build_knn_graph(const Points2& positions, Index k) {
  const Index n = positions.rows();
  if (k < 1) throw GraphError("k must be positive");
  if (n < k + 1) {
    throw GraphError("k-NN graph needs at least k+1 = " + std::to_string(k + 1) + " points, got " + std::to_string(n));
  }
  if (!positions.allFinite()) throw GraphError("non-finite positions");

  std::vector<Edge> edges;
  std::vector<double> lengths;
  edges.reserve(static_cast<std::size_t>(n * k));
  std::vector<std::pair<double, Index>> cand;
  for (Index target = 0; target < n; ++target) {
    cand.clear();
    for (Index m = 0; m < n; ++m) {
      if (m == target) continue;
      cand.emplace_back((positions.row(m) - positions.row(target)).norm(), m);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (Index j = 0; j < k; ++j) {
      edges.push_back({cand[j].second, target, 0.0});
      lengths.push_back(cand[j].first);
    }
  }

  const double mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(lengths.size());
  double var = 0.0;
  for (double d : lengths) var += (d - mean) * (d - mean);
  const double sigma = std::sqrt(var / static_cast<double>(lengths.size()));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (sigma > 0.0) {
      const double r = lengths[i] / (4.0 * sigma);
      edges[i].weight = std::exp(-r * r);
    } else {
      edges[i].weight = 1.0;
    }
  }
  return GraphTopology(n, std::move(edges));
}

Points2 equirectangular_projection(const Points2& lat_lon_degrees) {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  Points2 out(lat_lon_degrees.rows(), 2);
  if (lat_lon_degrees.rows() == 0) return out;
  const double lat0 = lat_lon_degrees.col(0).mean() * kDeg;
  out.col(0) = lat_lon_degrees.col(1) * (kDeg * std::cos(lat0));
  out.col(1) = lat_lon_degrees.col(0) * kDeg;
  return out;
}

GraphTopology build_delaunay_dag(const Points2& points, std::span<const Index> order) {
  const Index n = points.rows();
  if (static_cast<Index>(order.size()) != n) throw GraphError("node order must be a permutation of all points");
  std::vector<Index> rank(static_cast<std::size_t>(n), -1);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Index v = order[pos];
    if (v < 0 || v >= n || rank[v] != -1) throw GraphError("node order must be a permutation of all points");
    rank[v] = static_cast<Index>(pos);
  }
  std::vector<Edge> edges;
  for (const auto& [a, b] : delaunay_edges(points)) {
    if (rank[a] < rank[b])
      edges.push_back({a, b, 1.0});
    else
      edges.push_back({b, a, 1.0});
  }
  return GraphTopology(n, std::move(edges));
}

std::vector<Index> topological_order(const GraphTopology& g) {
  const Index n = g.num_nodes();
  std::vector<Index> indeg(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<Index>> children(static_cast<std::size_t>(n));
  for (const auto& e : g.edges()) {
    ++indeg[e.target];
    children[e.source].push_back(e.target);
  }
  std::vector<Index> order;
  std::vector<Index> ready;
  for (Index v = n - 1; v >= 0; --v)
    if (indeg[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    const Index v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (Index c : children[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<Index>(order.size()) != n) throw GraphError("graph contains a cycle");
  return order;
}

bool is_acyclic(const GraphTopology& g) {
  try {
    topological_order(g);
    return true;
  } catch (const GraphError&) {
    return false;
  }
}

FilteredGraph largest_weak_component(const GraphTopology& g) {
  const Index n = g.num_nodes();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  const auto find = [&](Index v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& e : g.edges()) {
    const Index a = find(e.source);
    const Index b = find(e.target);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<Index> size(static_cast<std::size_t>(n), 0);
  for (Index v = 0; v < n; ++v) ++size[find(v)];
  Index best = -1;
  for (Index v = 0; v < n; ++v)
    if (find(v) == v && (best < 0 || size[v] > size[best])) best = v;

  FilteredGraph out;
  std::vector<Index> remap(static_cast<std::size_t>(n), -1);
  for (Index v = 0; v < n; ++v) {
    if (best >= 0 && find(v) == best) {
      remap[v] = static_cast<Index>(out.kept_nodes.size());
      out.kept_nodes.push_back(v);
    }
  }
  std::vector<Edge> edges;
  for (const auto& e : g.edges())
    if (remap[e.source] >= 0 && remap[e.target] >= 0) edges.push_back({remap[e.source], remap[e.target], e.weight});
  out.graph = GraphTopology(static_cast<Index>(out.kept_nodes.size()), std::move(edges));
  return out;
}

void save_edge_csv(const GraphTopology& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "src,dst,weight\n";
  char buf[64];
  for (const auto& e : g.edges()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
    out << e.source << ',' << e.target << ',' << buf << '\n';
  }
}

GraphTopology load_edge_csv(const std::filesystem::path& path, Index num_nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw GraphError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "src,dst,weight") throw GraphError(path.string() + ":1: expected header 'src,dst,weight'");
  std::vector<Edge> edges;
  Index max_id = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, w;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, w)) {
      throw GraphError(path.string() + ":" + std::to_string(lineno) + ": expected three fields");
    }
    Edge e;
    try {
      std::size_t pa = 0, pb = 0, pw = 0;
      e.source = std::stoll(a, &pa);
      e.target = std::stoll(b, &pb);
      e.weight = std::stod(w, &pw);
      if (pa != a.size() || pb != b.size() || pw != w.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw GraphError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
    if (e.source == e.target) {
      throw GraphError(path.string() + ":" + std::to_string(lineno) + ": self-loop at node " + std::to_string(e.source));
    }
    max_id = std::max({max_id, e.source, e.target});
    edges.push_back(e);
  }
  const Index n = num_nodes >= 0 ? num_nodes : max_id + 1;
  try {
    return GraphTopology(n, std::move(edges));
  } catch (const GraphError& err) {
    throw GraphError(path.string() + ": " + err.what());
  }
}

}  // namespace tgnn4i
