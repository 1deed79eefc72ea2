#pragma once

// One-pixel-per-vertex images: grayscale PGM (P5) for scalar fields and colour
// PPM (P6) for cluster labels. Row 0 of the image is the largest e_2
// coordinate; d = 3 inputs are cut at the central e_3 slice.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "phom/cluster_labels.hpp"
#include "phom/io.hpp"
#include "phom/lattice.hpp"

namespace phom {

namespace detail {
/// Vertex indices of the rendered slice in image order.
inline std::vector<std::size_t> raster(const CubeDomain& dom) {
  const std::int64_t n = dom.side();
  const std::int64_t z = dom.dim() == 3 ? n / 2 : 0;
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n * n));
  for (std::int64_t y = n - 1; y >= 0; --y)
    for (std::int64_t x = 0; x < n; ++x) out.push_back(dom.index({x, y, z}));
  return out;
}
}  // namespace detail

/// Min-max normalised grayscale over the visible vertices; vertices outside
/// `visible` (when given) are black, and a constant field renders as gray 128.
inline void write_pgm(std::ostream& os, const ScalarField& u, const VertexMask& visible = {}) {
  const auto px = detail::raster(u.domain);
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t x : px) {
    if (!visible.empty() && !visible[x]) continue;
    lo = any ? std::min(lo, u[x]) : u[x];
    hi = any ? std::max(hi, u[x]) : u[x];
    any = true;
  }
  const std::int64_t n = u.domain.side();
  os << "P5\n" << n << " " << n << "\n255\n";
  for (std::size_t x : px) {
    unsigned char c = 0;
    if (visible.empty() || visible[x]) {
      c = hi > lo ? static_cast<unsigned char>(std::clamp((u[x] - lo) / (hi - lo) * 255.0 + 0.5, 0.0, 255.0)) : 128;
    }
    os.put(static_cast<char>(c));
  }
}

/// Maximal cluster blue, other clusters red, vertices without open edges white.
inline void write_label_ppm(std::ostream& os, const ClusterLabels& labels) {
  const auto px = detail::raster(labels.domain);
  const std::int64_t n = labels.domain.side();
  os << "P6\n" << n << " " << n << "\n255\n";
  for (std::size_t x : px) {
    unsigned char rgb[3] = {255, 255, 255};
    if (labels.in_maximal(x)) {
      rgb[0] = 0;
      rgb[1] = 0;
    } else if (labels.label[x] != kNoCluster) {
      rgb[1] = 0;
      rgb[2] = 0;
    }
    os.write(reinterpret_cast<const char*>(rgb), 3);
  }
}

}  // namespace phom
