#pragma once

// Connectivity of the open subgraph: union-find labelling, crossing clusters,
// well-connected and good triadic cubes, the partition of good cubes, coarsened
// functions, and small clusters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>
#include <vector>

#include "phom/cluster_labels.hpp"
#include "phom/lattice.hpp"
#include "phom/percolation.hpp"

namespace phom {

/// Disjoint-set forest with path compression and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n = 0) { reset(n); }

  void reset(std::size_t n) {
    parent_.resize(n);
    size_.assign(n, 1);
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

  std::size_t set_size(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

namespace detail {
inline unsigned full_face_mask(int dim) { return (1u << (2 * dim)) - 1u; }

inline unsigned faces_touched(const Point& ic, const Point& lo, std::int64_t size, int dim) {
  unsigned f = 0;
  for (int j = 0; j < dim; ++j) {
    if (ic[j] == lo[j]) f |= 1u << (2 * j);
    if (ic[j] == lo[j] + size - 1) f |= 1u << (2 * j + 1);
  }
  return f;
}
}  // namespace detail

/// Labels the components of the open subgraph of the whole cube. C_* is the
/// largest component touching all 2d faces; without one, the largest component.
inline ClusterLabels union_find_clusters(const ConductanceField& a) {
  const CubeDomain& dom = a.domain;
  const std::size_t n = dom.size();
  DisjointSets sets(n);
  for (int j = 0; j < dom.dim(); ++j) {
    const auto s = static_cast<std::size_t>(dom.stride(j));
    for (std::size_t x = 0; x < n; ++x)
      if (a.values[j][x] > 0.0) sets.unite(x, x + s);
  }

  ClusterLabels out;
  out.domain = dom;
  out.label.assign(n, kNoCluster);
  std::vector<std::int64_t> root_label(n, kNoCluster);
  std::vector<std::size_t> comp_size(n, 0);
  std::vector<unsigned> comp_faces(n, 0);
  const Point origin{};
  for (std::size_t x = 0; x < n; ++x) {
    if (!a.has_open_edge(x)) continue;
    const std::size_t r = sets.find(x);
    if (root_label[r] == kNoCluster) {
      root_label[r] = static_cast<std::int64_t>(x);
      ++out.component_count;
    }
    const auto lab = static_cast<std::size_t>(root_label[r]);
    out.label[x] = root_label[r];
    ++comp_size[lab];
    comp_faces[lab] |= detail::faces_touched(dom.index_coords(x), origin, dom.side(), dom.dim());
  }

  const unsigned full = detail::full_face_mask(dom.dim());
  std::int64_t best_cross = kNoCluster, best_any = kNoCluster;
  for (std::size_t lab = 0; lab < n; ++lab) {
    if (comp_size[lab] == 0) continue;
    const auto l = static_cast<std::int64_t>(lab);
    if (best_any == kNoCluster || comp_size[lab] > comp_size[static_cast<std::size_t>(best_any)]) best_any = l;
    if (comp_faces[lab] == full &&
        (best_cross == kNoCluster || comp_size[lab] > comp_size[static_cast<std::size_t>(best_cross)]))
      best_cross = l;
  }
  out.maximal_is_crossing = best_cross != kNoCluster;
  out.maximal_id = out.maximal_is_crossing ? best_cross : best_any;
  return out;
}

/// Components of the open subgraph restricted to the vertices in `region`
/// (edges with both endpoints inside). Vertices outside get kNoCluster; inside
/// vertices are labelled by the smallest index of their component, isolated
/// ones included.
inline std::vector<std::int64_t> components_in_region(const ConductanceField& a, const VertexMask& region) {
  const CubeDomain& dom = a.domain;
  DisjointSets sets(dom.size());
  for (int j = 0; j < dom.dim(); ++j) {
    const auto s = static_cast<std::size_t>(dom.stride(j));
    for (std::size_t x = 0; x < dom.size(); ++x)
      if (a.values[j][x] > 0.0 && region[x] && region[x + s]) sets.unite(x, x + s);
  }
  std::vector<std::int64_t> label(dom.size(), kNoCluster), root_label(dom.size(), kNoCluster);
  for (std::size_t x = 0; x < dom.size(); ++x) {
    if (!region[x]) continue;
    const std::size_t r = sets.find(x);
    if (root_label[r] == kNoCluster) root_label[r] = static_cast<std::int64_t>(x);
    label[x] = root_label[r];
  }
  return label;
}

// -- Lattice boxes -------------------------------------------------------------

/// An axis-aligned lattice cube inside the domain: `size` vertices per side,
/// lowest corner `lo` in index coordinates.
struct LatticeBox {
  Point lo{};
  std::int64_t size = 1;

  static LatticeBox of(const TriadicCube& c) { return {c.base, c.size()}; }
};

struct BoxComponent {
  std::size_t vertices = 0;
  unsigned faces = 0;
  Point bb_lo{}, bb_hi{};
  bool touches_marked = false;

  /// l-infinity diameter of the vertex set.
  std::int64_t diameter(int dim) const {
    std::int64_t d = 0;
    for (int j = 0; j < dim; ++j) d = std::max(d, bb_hi[j] - bb_lo[j]);
    return d;
  }
};

/// Components of the open subgraph inside a box (isolated vertices are their
/// own components).
struct BoxAnalysis {
  LatticeBox box;
  int dim = 2;
  std::vector<std::int32_t> comp_of;  // local vertex -> component id
  std::vector<BoxComponent> comps;

  std::size_t local_count() const { return comp_of.size(); }

  Point local_coords(std::size_t l) const {
    Point ic{};
    auto rest = static_cast<std::int64_t>(l);
    for (int j = 0; j < dim; ++j) {
      ic[j] = box.lo[j] + rest % box.size;
      rest /= box.size;
    }
    return ic;
  }

  bool crossable() const {
    for (int j = 0; j < dim; ++j) {
      const unsigned both = (1u << (2 * j)) | (1u << (2 * j + 1));
      bool ok = false;
      for (const auto& c : comps) ok = ok || (c.faces & both) == both;
      if (!ok) return false;
    }
    return true;
  }

  std::vector<std::int32_t> crossing_components() const {
    std::vector<std::int32_t> out;
    const unsigned full = detail::full_face_mask(dim);
    for (std::size_t c = 0; c < comps.size(); ++c)
      if (comps[c].faces == full) out.push_back(static_cast<std::int32_t>(c));
    return out;
  }
};

/// Analyses the open subgraph inside `box`. When `marked` is given, each
/// component records whether it contains a marked vertex.
inline BoxAnalysis analyze_box(const ConductanceField& a, const LatticeBox& box, const VertexMask* marked = nullptr) {
  const CubeDomain& dom = a.domain;
  const int d = dom.dim();
  BoxAnalysis out;
  out.box = box;
  out.dim = d;
  std::size_t count = 1;
  std::array<std::size_t, kMaxDim> lstride{};
  for (int j = 0; j < d; ++j) {
    lstride[j] = count;
    count *= static_cast<std::size_t>(box.size);
  }
  DisjointSets sets(count);
  std::vector<std::size_t> global(count);
  for (std::size_t l = 0; l < count; ++l) {
    const Point ic = out.local_coords(l);
    global[l] = dom.index(ic);
  }
  for (std::size_t l = 0; l < count; ++l) {
    for (int j = 0; j < d; ++j) {
      const std::int64_t c = (static_cast<std::int64_t>(l) / static_cast<std::int64_t>(lstride[j])) % box.size;
      if (c + 1 < box.size && a.values[j][global[l]] > 0.0) sets.unite(l, l + lstride[j]);
    }
  }
  out.comp_of.assign(count, -1);
  std::vector<std::int32_t> root_comp(count, -1);
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t r = sets.find(l);
    if (root_comp[r] < 0) {
      root_comp[r] = static_cast<std::int32_t>(out.comps.size());
      BoxComponent bc;
      bc.bb_lo.fill(std::numeric_limits<std::int64_t>::max());
      bc.bb_hi.fill(std::numeric_limits<std::int64_t>::min());
      out.comps.push_back(bc);
    }
    const std::int32_t cid = root_comp[r];
    out.comp_of[l] = cid;
    BoxComponent& bc = out.comps[static_cast<std::size_t>(cid)];
    const Point ic = out.local_coords(l);
    ++bc.vertices;
    bc.faces |= detail::faces_touched(ic, box.lo, box.size, d);
    for (int j = 0; j < d; ++j) {
      bc.bb_lo[j] = std::min(bc.bb_lo[j], ic[j]);
      bc.bb_hi[j] = std::max(bc.bb_hi[j], ic[j]);
    }
    if (marked && (*marked)[global[l]]) bc.touches_marked = true;
  }
  return out;
}

/// Each of the d pairs of opposite faces of the box is joined by an open path
/// inside the box.
inline bool is_crossable(const ConductanceField& a, const LatticeBox& box) { return analyze_box(a, box).crossable(); }

/// Whether the component (inside the box) of the vertex with index coordinates
/// `member` meets all 2d faces.
inline bool is_crossing_cluster(const ConductanceField& a, const LatticeBox& box, const Point& member) {
  const BoxAnalysis an = analyze_box(a, box);
  std::size_t l = 0, mult = 1;
  for (int j = 0; j < a.domain.dim(); ++j) {
    if (member[j] < box.lo[j] || member[j] >= box.lo[j] + box.size) throw InvalidArgument("vertex outside box");
    l += static_cast<std::size_t>(member[j] - box.lo[j]) * mult;
    mult *= static_cast<std::size_t>(box.size);
  }
  return an.comps[static_cast<std::size_t>(an.comp_of[l])].faces == detail::full_face_mask(a.domain.dim());
}

enum class Goodness { good, bad, unchecked };

/// Largest side length for which goodness is checked exhaustively.
inline constexpr std::int64_t kGoodnessCap = 81;

/// Well-connectedness of a box of side s: some crossing cluster C such that
/// (1) every sub-box of side in [s/10, s/2] meeting the 3/4-scaled hull of the
/// box is crossable, and (2) inside each such sub-box every component of
/// l-infinity diameter >= s/10 meets C. Sub-boxes range over all lattice
/// positions inside the box.
inline Goodness well_connected(const ConductanceField& a, const LatticeBox& box) {
  const int d = a.domain.dim();
  const std::int64_t s = box.size;
  if (s > kGoodnessCap) return Goodness::unchecked;
  const BoxAnalysis whole = analyze_box(a, box);
  const std::vector<std::int32_t> candidates = whole.crossing_components();
  if (candidates.empty()) return Goodness::bad;

  std::vector<VertexMask> member(candidates.size(), VertexMask(a.domain.size(), 0));
  for (std::size_t l = 0; l < whole.local_count(); ++l)
    for (std::size_t c = 0; c < candidates.size(); ++c)
      if (whole.comp_of[l] == candidates[c]) member[c][a.domain.index(whole.local_coords(l))] = 1;
  std::vector<bool> alive(candidates.size(), true);

  const double big_path = static_cast<double>(s) / 10.0;
  const auto kmin = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(static_cast<double>(s) / 10.0)));
  const std::int64_t kmax = s / 2;
  const double half_width = 0.75 * static_cast<double>(s - 1) / 2.0;

  for (std::int64_t k = kmin; k <= kmax; ++k) {
    const std::int64_t span = s - k + 1;
    std::int64_t positions = 1;
    for (int j = 0; j < d; ++j) positions *= span;
    for (std::int64_t pos = 0; pos < positions; ++pos) {
      LatticeBox sub{{}, k};
      auto rest = pos;
      bool meets_hull = true;
      for (int j = 0; j < d; ++j) {
        sub.lo[j] = box.lo[j] + rest % span;
        rest /= span;
        const double c = static_cast<double>(box.lo[j]) + static_cast<double>(s - 1) / 2.0;
        const auto b = static_cast<double>(sub.lo[j]);
        if (b > c + half_width || b + static_cast<double>(k - 1) < c - half_width) meets_hull = false;
      }
      if (!meets_hull) continue;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (!alive[c]) continue;
        const BoxAnalysis an = analyze_box(a, sub, &member[c]);
        if (!an.crossable()) return Goodness::bad;
        for (const auto& comp : an.comps)
          if (static_cast<double>(comp.diameter(d)) >= big_path && !comp.touches_marked) alive[c] = false;
      }
      if (std::none_of(alive.begin(), alive.end(), [](bool v) { return v; })) return Goodness::bad;
    }
  }
  return Goodness::good;
}

/// A triadic cube is good when its size is at least 3, it has a crossing
/// cluster, and all 3^d successors are well-connected. Cubes larger than
/// kGoodnessCap report `unchecked`.
inline Goodness good_cube(const ConductanceField& a, const TriadicCube& cube) {
  if (cube.level < 1) return Goodness::bad;
  if (cube.size() > kGoodnessCap) return Goodness::unchecked;
  const int d = a.domain.dim();
  if (analyze_box(a, LatticeBox::of(cube)).crossing_components().empty()) return Goodness::bad;
  const std::int64_t child = pow3(cube.level - 1);
  const int children = static_cast<int>(pow3(d));
  for (int c = 0; c < children; ++c) {
    LatticeBox sub{cube.base, child};
    int rest = c;
    for (int j = 0; j < d; ++j) {
      sub.lo[j] += (rest % 3) * child;
      rest /= 3;
    }
    if (well_connected(a, sub) != Goodness::good) return Goodness::bad;
  }
  return Goodness::good;
}

// -- Partition of good cubes --------------------------------------------------

struct PartitionCube {
  TriadicCube cube;
  /// Vertex of C_*(cube) closest to the cube centre, or -1 when the cube has
  /// no crossing cluster.
  std::int64_t anchor = -1;
};

struct Partition {
  CubeDomain domain;
  /// Triadic level n(x) of the partition cube containing each vertex.
  std::vector<std::int8_t> level;
  std::vector<PartitionCube> cubes;
  std::vector<std::int32_t> cube_id;
  /// The top cube exceeded the goodness cap and was assumed good.
  bool top_unchecked = false;
  /// The top cube is bad, so the partition is the whole cube.
  bool degenerate = false;
  std::map<std::tuple<int, std::int64_t, std::int64_t, std::int64_t>, Goodness> goodness;

  const PartitionCube& cube_of(std::size_t x) const { return cubes[static_cast<std::size_t>(cube_id[x])]; }
  std::int64_t size_at(std::size_t x) const { return pow3(level[x]); }

  /// Cached goodness lookup (unchecked cubes are reported as such).
  Goodness goodness_of(const ConductanceField& a, const TriadicCube& c) {
    const auto key = std::make_tuple(c.level, c.base[0], c.base[1], c.base[2]);
    auto it = goodness.find(key);
    if (it != goodness.end()) return it->second;
    const Goodness g = good_cube(a, c);
    goodness.emplace(key, g);
    return g;
  }
};

namespace detail {
template <class Fn>
void for_each_in_cube(const CubeDomain& dom, const TriadicCube& c, Fn&& fn) {
  const std::int64_t s = c.size();
  const std::int64_t nz = dom.dim() == 3 ? s : 1;
  for (std::int64_t k = 0; k < nz; ++k)
    for (std::int64_t j = 0; j < s; ++j)
      for (std::int64_t i = 0; i < s; ++i) fn(dom.index({c.base[0] + i, c.base[1] + j, c.base[2] + k}));
}

/// Vertex of the largest crossing component of the cube closest (Euclidean)
/// to its centre; ties go to the lexicographically smallest global coordinates.
inline std::int64_t cube_anchor(const ConductanceField& a, const TriadicCube& c) {
  const CubeDomain& dom = a.domain;
  const BoxAnalysis an = analyze_box(a, LatticeBox::of(c));
  const auto crossing = an.crossing_components();
  if (crossing.empty()) return -1;
  std::int32_t best_comp = crossing.front();
  for (auto id : crossing)
    if (an.comps[static_cast<std::size_t>(id)].vertices > an.comps[static_cast<std::size_t>(best_comp)].vertices)
      best_comp = id;
  const double half = static_cast<double>(c.size() - 1) / 2.0;
  std::int64_t best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  Point best_x{};
  for (std::size_t l = 0; l < an.local_count(); ++l) {
    if (an.comp_of[l] != best_comp) continue;
    const Point ic = an.local_coords(l);
    double d2 = 0.0;
    for (int j = 0; j < dom.dim(); ++j) {
      const double off = static_cast<double>(ic[j] - c.base[j]) - half;
      d2 += off * off;
    }
    const std::size_t idx = dom.index(ic);
    const Point gx = dom.coords(idx);
    if (d2 < best_d2 || (d2 == best_d2 && gx < best_x)) {
      best_d2 = d2;
      best = static_cast<std::int64_t>(idx);
      best_x = gx;
    }
  }
  return best;
}

inline void refine(const ConductanceField& a, Partition& p, const TriadicCube& q) {
  const CubeDomain& dom = a.domain;
  bool split = q.level >= 2;
  std::vector<TriadicCube> kids;
  if (split) {
    const std::int64_t child = pow3(q.level - 1);
    const int children = static_cast<int>(pow3(dom.dim()));
    for (int c = 0; c < children && split; ++c) {
      TriadicCube k{q.level - 1, q.base};
      int rest = c;
      for (int j = 0; j < dom.dim(); ++j) {
        k.base[j] += (rest % 3) * child;
        rest /= 3;
      }
      if (p.goodness_of(a, k) == Goodness::bad) split = false;
      kids.push_back(k);
    }
  }
  if (!split) {
    for_each_in_cube(dom, q, [&](std::size_t x) { p.level[x] = static_cast<std::int8_t>(q.level); });
    return;
  }
  for (const auto& k : kids) refine(a, p, k);
}
}  // namespace detail

/// Builds the partition of good cubes: starting from the whole cube, a cube is
/// split into its 3^d successors whenever all of them are good (its ancestors
/// are good by construction). Levels are then raised until neighbouring
/// partition cubes differ by at most one level.
inline Partition build_partition(const ConductanceField& a) {
  const CubeDomain& dom = a.domain;
  Partition p;
  p.domain = dom;
  p.level.assign(dom.size(), static_cast<std::int8_t>(dom.level()));
  const TriadicCube top{dom.level(), {}};
  const Goodness g = p.goodness_of(a, top);
  if (g == Goodness::unchecked) p.top_unchecked = true;
  if (g == Goodness::bad) {
    p.degenerate = true;
    bool any_good = false;
    for (int n = dom.level() - 1; n >= 1 && !any_good; --n) {
      const std::int64_t s = pow3(n);
      for (std::size_t x = 0; x < dom.size() && !any_good; ++x) {
        const Point ic = dom.index_coords(x);
        bool corner = true;
        for (int j = 0; j < dom.dim(); ++j) corner = corner && ic[j] % s == 0;
        if (corner && p.goodness_of(a, triadic_cube_at(ic, n)) == Goodness::good) any_good = true;
      }
    }
    if (!any_good) throw InvalidArgument("subcritical-looking sample: no good cube in the domain");
  } else {
    detail::refine(a, p, top);
  }

  // Comparability of neighbours: raise the finer cube towards the coarser one.
  const int d = dom.dim();
  std::vector<Point> offsets;
  for (int dz = (d == 3 ? -1 : 0); dz <= (d == 3 ? 1 : 0); ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (dx || dy || dz) offsets.push_back({dx, dy, dz});
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t x = 0; x < dom.size(); ++x) {
      const Point ic = dom.index_coords(x);
      for (const auto& o : offsets) {
        const Point nb{ic[0] + o[0], ic[1] + o[1], ic[2] + o[2]};
        if (!dom.contains_index_coords(nb)) continue;
        const int ly = p.level[dom.index(nb)];
        if (ly > p.level[x] + 1) {
          const TriadicCube raise = triadic_cube_at(ic, ly - 1);
          detail::for_each_in_cube(dom, raise, [&](std::size_t z) {
            p.level[z] = std::max<std::int8_t>(p.level[z], static_cast<std::int8_t>(ly - 1));
          });
          changed = true;
        }
      }
    }
  }

  p.cube_id.assign(dom.size(), -1);
  for (std::size_t x = 0; x < dom.size(); ++x) {
    if (p.cube_id[x] >= 0) continue;
    const TriadicCube c = triadic_cube_at(dom.index_coords(x), p.level[x]);
    const auto id = static_cast<std::int32_t>(p.cubes.size());
    p.cubes.push_back({c, detail::cube_anchor(a, c)});
    detail::for_each_in_cube(dom, c, [&](std::size_t z) { p.cube_id[z] = id; });
  }
  return p;
}

struct PartitionAudit {
  bool tiles = true;
  bool comparable = true;
  bool ancestors_good = true;
};

/// Checks the partition invariants: consistent tiling, neighbour levels within
/// one, and every partition cube with all its ancestors good (or unchecked).
inline PartitionAudit audit_partition(const ConductanceField& a, Partition& p) {
  const CubeDomain& dom = p.domain;
  PartitionAudit out;
  for (std::size_t x = 0; x < dom.size(); ++x) {
    const TriadicCube c = triadic_cube_at(dom.index_coords(x), p.level[x]);
    detail::for_each_in_cube(dom, c, [&](std::size_t z) {
      if (p.level[z] != p.level[x]) out.tiles = false;
    });
    const Point ic = dom.index_coords(x);
    for (int j = 0; j < dom.dim(); ++j)
      for (int dlt = -1; dlt <= 1; dlt += 2) {
        Point nb = ic;
        nb[j] += dlt;
        if (dom.contains_index_coords(nb) && std::abs(p.level[dom.index(nb)] - p.level[x]) > 1)
          out.comparable = false;
      }
  }
  if (p.degenerate) {
    out.ancestors_good = false;
    return out;
  }
  for (const auto& pc : p.cubes)
    for (TriadicCube c = pc.cube; c.level <= dom.level(); c = c.predecessor())
      if (p.goodness_of(a, c) == Goodness::bad) out.ancestors_good = false;
  return out;
}

enum class CoarsenVariant {
  interior,
  /// Forces 0 on partition cubes that touch the domain boundary.
  boundary_zero
};

/// [u]_P: constant on each partition cube, equal to u at the cube's anchor.
inline ScalarField coarsen(const ScalarField& u, const Partition& p, CoarsenVariant variant = CoarsenVariant::interior) {
  require_same_domain(u.domain, p.domain);
  const CubeDomain& dom = p.domain;
  std::vector<double> value(p.cubes.size());
  for (std::size_t c = 0; c < p.cubes.size(); ++c) {
    const PartitionCube& pc = p.cubes[c];
    if (pc.anchor < 0) throw InvalidArgument("partition cube without a crossing cluster");
    value[c] = u[static_cast<std::size_t>(pc.anchor)];
    if (variant == CoarsenVariant::boundary_zero) {
      bool touches = false;
      for (int j = 0; j < dom.dim(); ++j)
        touches = touches || pc.cube.base[j] == 0 || pc.cube.base[j] + pc.cube.size() == dom.side();
      if (touches) value[c] = 0.0;
    }
  }
  ScalarField out(dom);
  for (std::size_t x = 0; x < dom.size(); ++x) out[x] = value[static_cast<std::size_t>(p.cube_id[x])];
  return out;
}

struct SmallClusters {
  VertexMask members;
  std::size_t count = 0;
  /// All members lie in partition cubes touching the domain boundary.
  bool within_boundary_layer = true;
};

/// Union of the open components other than C_* that contain a boundary vertex.
inline SmallClusters small_clusters(const ConductanceField& a, const ClusterLabels& labels, const Partition& p) {
  require_same_domain(a.domain, labels.domain);
  const CubeDomain& dom = a.domain;
  std::vector<std::uint8_t> selected(dom.size(), 0);
  for (std::size_t x = 0; x < dom.size(); ++x) {
    const auto l = labels.label[x];
    if (l != kNoCluster && l != labels.maximal_id && dom.is_boundary(x)) selected[static_cast<std::size_t>(l)] = 1;
  }
  SmallClusters out;
  out.members.assign(dom.size(), 0);
  for (std::size_t x = 0; x < dom.size(); ++x) {
    const auto l = labels.label[x];
    if (l == kNoCluster || !selected[static_cast<std::size_t>(l)]) continue;
    out.members[x] = 1;
    ++out.count;
    const TriadicCube& c = p.cube_of(x).cube;
    bool touches = false;
    for (int j = 0; j < dom.dim(); ++j) touches = touches || c.base[j] == 0 || c.base[j] + c.size() == dom.side();
    if (!touches) out.within_boundary_layer = false;
  }
  return out;
}

}  // namespace phom
