// Bowyer-Watson triangulation with a super-triangle. O(n^2): every insertion
// scans all live triangles, which is fine for the few thousand points the
// dataset builders need.

#include <algorithm>
#include <map>
#include <string>

#include "tgnn4i/graph.hpp"

namespace tgnn4i {
namespace {

using Real = long double;

struct P {
  Real x, y;
};

Real orient(const P& a, const P& b, const P& c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

// > 0 when d is strictly inside the circumcircle of counter-clockwise (a, b, c).
Real incircle(const P& a, const P& b, const P& c, const P& d) {
  const Real adx = a.x - d.x, ady = a.y - d.y;
  const Real bdx = b.x - d.x, bdy = b.y - d.y;
  const Real cdx = c.x - d.x, cdy = c.y - d.y;
  const Real ad = adx * adx + ady * ady;
  const Real bd = bdx * bdx + bdy * bdy;
  const Real cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

// Number of points on the convex hull boundary, collinear boundary points included.
Index hull_point_count(const std::vector<P>& pts) {
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x < pts[b].x || (pts[a].x == pts[b].x && pts[a].y < pts[b].y);
  });
  std::vector<std::size_t> hull(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    while (k >= 2 && orient(pts[hull[k - 2]], pts[hull[k - 1]], pts[idx[i]]) < 0) --k;
    hull[k++] = idx[i];
  }
  for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && orient(pts[hull[k - 2]], pts[hull[k - 1]], pts[idx[i]]) < 0) --k;
    hull[k++] = idx[i];
  }
  return static_cast<Index>(k - 1);
}

}  // namespace

std::vector<std::array<Index, 3>> delaunay_triangles(const Points2& points) {
  const Index n = points.rows();
  if (n < 3) throw GraphError("Delaunay triangulation needs at least 3 points");
  if (!points.allFinite()) throw GraphError("non-finite point coordinates");

  std::vector<P> pts(static_cast<std::size_t>(n) + 3);
  for (Index i = 0; i < n; ++i) pts[i] = {static_cast<Real>(points(i, 0)), static_cast<Real>(points(i, 1))};

  const double minx = points.col(0).minCoeff(), maxx = points.col(0).maxCoeff();
  const double miny = points.col(1).minCoeff(), maxy = points.col(1).maxCoeff();
  const Real span = std::max<Real>(std::max(maxx - minx, maxy - miny), 1.0L);
  const Real cx = (minx + maxx) / 2.0L, cy = (miny + maxy) / 2.0L;
  const Real big = 1e5L * span;
  pts[n] = {cx - 2 * big, cy - big};
  pts[n + 1] = {cx + 2 * big, cy - big};
  pts[n + 2] = {cx, cy + 2 * big};

  std::vector<std::array<Index, 3>> tris{{n, n + 1, n + 2}};
  std::vector<std::array<Index, 3>> keep;
  std::map<std::pair<Index, Index>, int> edge_count;
  std::vector<std::pair<Index, Index>> boundary;

  for (Index p = 0; p < n; ++p) {
    keep.clear();
    edge_count.clear();
    std::vector<std::array<Index, 3>> bad;
    for (const auto& t : tris) {
      if (incircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[p]) > 0)
        bad.push_back(t);
      else
        keep.push_back(t);
    }
    if (bad.empty()) throw GraphError("degenerate point set (duplicate point " + std::to_string(p) + "); resample");
    for (const auto& t : bad)
      for (int e = 0; e < 3; ++e) {
        const Index u = t[e], v = t[(e + 1) % 3];
        ++edge_count[{std::min(u, v), std::max(u, v)}];
      }
    boundary.clear();
    for (const auto& t : bad)
      for (int e = 0; e < 3; ++e) {
        const Index u = t[e], v = t[(e + 1) % 3];
        if (edge_count[{std::min(u, v), std::max(u, v)}] == 1) boundary.emplace_back(u, v);
      }
    for (const auto& [u, v] : boundary) {
      if (orient(pts[u], pts[v], pts[p]) <= 0) {
        throw GraphError("degenerate point configuration near point " + std::to_string(p) + "; resample");
      }
      keep.push_back({u, v, p});
    }
    tris.swap(keep);
  }

  std::vector<std::array<Index, 3>> out;
  for (const auto& t : tris)
    if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);
  if (out.empty()) throw GraphError("all points are collinear; resample");

  // A complete triangulation of n points with h on the hull has 2n - h - 2
  // triangles. Fewer means the super-triangle clipped a hull triangle, which
  // only happens for nearly collinear hull points.
  pts.resize(static_cast<std::size_t>(n));
  const Index expected = 2 * n - hull_point_count(pts) - 2;
  if (static_cast<Index>(out.size()) != expected) {
    throw GraphError("degenerate point configuration (incomplete hull triangulation); resample");
  }
  return out;
}

std::vector<std::pair<Index, Index>> delaunay_edges(const Points2& points) {
  std::vector<std::pair<Index, Index>> edges;
  for (const auto& t : delaunay_triangles(points))
    for (int e = 0; e < 3; ++e) {
      const Index u = t[e], v = t[(e + 1) % 3];
      edges.emplace_back(std::min(u, v), std::max(u, v));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace tgnn4i
