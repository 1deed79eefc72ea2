#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "phom/lattice.hpp"

namespace phom {

/// Label of a vertex with no open incident edge.
inline constexpr std::int64_t kNoCluster = -1;

/// Connected components of the open subgraph of a cube. A component's label is
/// the smallest vertex index it contains.
struct ClusterLabels {
  CubeDomain domain;
  std::vector<std::int64_t> label;
  /// Label of the maximal cluster C_*, or kNoCluster when there is none.
  std::int64_t maximal_id = kNoCluster;
  /// Whether the maximal cluster touches all 2d faces of the cube.
  bool maximal_is_crossing = false;
  std::size_t component_count = 0;

  bool in_maximal(std::size_t x) const { return maximal_id != kNoCluster && label[x] == maximal_id; }

  std::size_t maximal_size() const {
    std::size_t n = 0;
    for (std::size_t x = 0; x < label.size(); ++x) n += in_maximal(x);
    return n;
  }

  VertexMask maximal_mask() const {
    VertexMask m(label.size());
    for (std::size_t x = 0; x < label.size(); ++x) m[x] = in_maximal(x);
    return m;
  }

  /// Vertices of C_* that are not on the cube boundary.
  VertexMask maximal_interior_mask() const {
    VertexMask m(label.size());
    for (std::size_t x = 0; x < label.size(); ++x) m[x] = in_maximal(x) && !domain.is_boundary(x);
    return m;
  }
};

}  // namespace phom
