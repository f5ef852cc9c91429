#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace tgnn4i {

using Index = Eigen::Index;

/// 2-D point set, one point per row.
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Edge {
  Index source = 0;
  Index target = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Index source = 0;
  double weight = 1.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Directed weighted graph with in-neighbour lists. Immutable once built.
///
/// Invariants: no self-loops, finite non-negative weights, no duplicate
/// (source, target) pairs. In-neighbour lists keep edge-list order.
class GraphTopology {
 public:
  GraphTopology() = default;
  GraphTopology(Index num_nodes, std::vector<Edge> edges);

  Index num_nodes() const { return num_nodes_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Parents N(n) with weights e_{m,n}; throws GraphError for a bad id.
  std::span<const Neighbor> in_neighbors(Index n) const;
  Index in_degree(Index n) const { return static_cast<Index>(in_neighbors(n).size()); }

  /// Stable 64-bit fingerprint of (num_nodes, edges).
  std::uint64_t checksum() const;

  /// Same nodes, no edges.
  GraphTopology without_edges() const { return GraphTopology(num_nodes_, {}); }

  /// Relabel: node n becomes perm[n].
  GraphTopology permuted(std::span<const Index> perm) const;

  friend bool operator==(const GraphTopology& a, const GraphTopology& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  Index num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<Index> offsets_;  // CSR offsets into neighbors_
  std::vector<Neighbor> neighbors_;
};

/// Edge (m, n) gets weight exp(-(d / (4 sigma))^2) where sigma is the
/// population standard deviation of all created edge lengths (weights are 1
/// when sigma is 0). Every node receives exactly k in-edges from its k nearest
/// points; ties go to the smaller index.
GraphTopology build_knn_graph(const Points2& positions, Index k);

/// Equirectangular projection of (lat, lon) in degrees, one row per point:
/// x = lon * cos(mean lat), y = lat, both in radians (unit sphere).
Points2 equirectangular_projection(const Points2& lat_lon_degrees);

/// Undirected Delaunay triangles (vertex index triples, counter-clockwise).
std::vector<std::array<Index, 3>> delaunay_triangles(const Points2& points);

/// Undirected Delaunay edges as (lo, hi) pairs, sorted.
std::vector<std::pair<Index, Index>> delaunay_edges(const Points2& points);

/// Delaunay edges oriented from the node that comes first in `order` to the
/// later one. The result is acyclic and all weights are 1.
GraphTopology build_delaunay_dag(const Points2& points, std::span<const Index> order);

/// Nodes in topological order; throws GraphError if the graph has a cycle.
std::vector<Index> topological_order(const GraphTopology& g);
bool is_acyclic(const GraphTopology& g);

/// Largest weakly connected component, with the kept original node ids
/// (ascending). Ties between equal-sized components go to the one holding
/// the smallest node id.
struct FilteredGraph {
  GraphTopology graph;
  std::vector<Index> kept_nodes;
};
FilteredGraph largest_weak_component(const GraphTopology& g);

/// Edge-list CSV with header `src,dst,weight` and zero-based ids. The node
/// count is max id + 1 unless `num_nodes` is given.
void save_edge_csv(const GraphTopology& g, const std::filesystem::path& path);
GraphTopology load_edge_csv(const std::filesystem::path& path, Index num_nodes = -1);

}  // namespace tgnn4i
