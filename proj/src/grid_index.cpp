#include "radarvi/grid_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "radarvi/errors.hpp"

namespace radarvi {

GridIndex::GridIndex(const std::vector<Eigen::Vector3d>& points, double cell_size)
    : points_(points), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw InvalidConfig("grid cell size must be positive");
  for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
    const Cell c = cell_of(points_[i]);
    if (i == 0) {
      lo_ = hi_ = c;
    } else {
      for (int k = 0; k < 3; ++k) {
        lo_[k] = std::min(lo_[k], c[k]);
        hi_[k] = std::max(hi_[k], c[k]);
      }
    }
    cells_[key_of(c)].push_back(i);
  }
}

GridIndex::Cell GridIndex::cell_of(const Eigen::Vector3d& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

std::uint64_t GridIndex::key_of(const Cell& c) {
  // 21 bits per axis around a large offset; scene extents are far smaller
  // than the 2^20-cell budget this allows per direction.
  const std::uint64_t x = static_cast<std::uint64_t>(c[0] + (1 << 20)) & 0x1fffff;
  const std::uint64_t y = static_cast<std::uint64_t>(c[1] + (1 << 20)) & 0x1fffff;
  const std::uint64_t z = static_cast<std::uint64_t>(c[2] + (1 << 20)) & 0x1fffff;
  return (x << 42) | (y << 21) | z;
}

void GridIndex::for_each_within(const Eigen::Vector3d& q, double radius,
                                const std::function<void(int)>& fn) const {
  if (points_.empty() || !(radius >= 0.0)) return;
  const Cell clo = cell_of(q - Eigen::Vector3d::Constant(radius));
  const Cell chi = cell_of(q + Eigen::Vector3d::Constant(radius));
  const double r2 = radius * radius;
  for (std::int64_t x = clo[0]; x <= chi[0]; ++x)
    for (std::int64_t y = clo[1]; y <= chi[1]; ++y)
      for (std::int64_t z = clo[2]; z <= chi[2]; ++z) {
        const auto it = cells_.find(key_of({x, y, z}));
        if (it == cells_.end()) continue;
        for (int i : it->second)
          if ((points_[i] - q).squaredNorm() <= r2) fn(i);
      }
}

int GridIndex::count_within(const Eigen::Vector3d& q, double radius) const {
  int n = 0;
  for_each_within(q, radius, [&n](int) { ++n; });
  return n;
}

std::pair<int, double> GridIndex::nearest(const Eigen::Vector3d& q) const {
  if (points_.empty()) return {-1, std::numeric_limits<double>::infinity()};

  const Cell cq = cell_of(q);
  // Furthest shell that can contain any point.
  std::int64_t s_max = 0;
  for (int k = 0; k < 3; ++k)
    s_max = std::max({s_max, std::abs(cq[k] - lo_[k]), std::abs(hi_[k] - cq[k])});

  int best = -1;
  double best2 = std::numeric_limits<double>::infinity();
  const auto visit = [&](const Cell& c) {
    const auto it = cells_.find(key_of(c));
    if (it == cells_.end()) return;
    for (int i : it->second) {
      const double d2 = (points_[i] - q).squaredNorm();
      if (d2 < best2) {
        best2 = d2;
        best = i;
      }
    }
  };

  // Visits the cells of the cube surface at Chebyshev radius s, clamped to
  // the occupied bounding box.
  const auto visit_shell = [&](std::int64_t s) {
    if (s == 0) {
      visit(cq);
      return;
    }
    const auto clamp_lo = [&](std::int64_t v, int k) { return std::max(v, lo_[k]); };
    const auto clamp_hi = [&](std::int64_t v, int k) { return std::min(v, hi_[k]); };
    for (int side = -1; side <= 1; side += 2) {
      const std::int64_t x = cq[0] + side * s;
      if (x >= lo_[0] && x <= hi_[0])
        for (std::int64_t y = clamp_lo(cq[1] - s, 1); y <= clamp_hi(cq[1] + s, 1); ++y)
          for (std::int64_t z = clamp_lo(cq[2] - s, 2); z <= clamp_hi(cq[2] + s, 2); ++z)
            visit({x, y, z});
      const std::int64_t y = cq[1] + side * s;
      if (y >= lo_[1] && y <= hi_[1])
        for (std::int64_t x2 = clamp_lo(cq[0] - s + 1, 0); x2 <= clamp_hi(cq[0] + s - 1, 0); ++x2)
          for (std::int64_t z = clamp_lo(cq[2] - s, 2); z <= clamp_hi(cq[2] + s, 2); ++z)
            visit({x2, y, z});
      const std::int64_t z = cq[2] + side * s;
      if (z >= lo_[2] && z <= hi_[2])
        for (std::int64_t x2 = clamp_lo(cq[0] - s + 1, 0); x2 <= clamp_hi(cq[0] + s - 1, 0); ++x2)
          for (std::int64_t y2 = clamp_lo(cq[1] - s + 1, 1); y2 <= clamp_hi(cq[1] + s - 1, 1); ++y2)
            visit({x2, y2, z});
    }
  };

  for (std::int64_t s = 0; s <= s_max; ++s) {
    // Any point in shell s is at least (s - 1) cells away; once the current
    // best beats that bound, no further shell can improve it.
    if (best >= 0) {
      const double bound = static_cast<double>(s - 1) * cell_size_;
      if (bound > 0.0 && bound * bound > best2) break;
    }
    visit_shell(s);
  }
  return {best, std::sqrt(best2)};
}

}  // namespace radarvi
