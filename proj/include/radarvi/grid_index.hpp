#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace radarvi {

// Uniform hash grid over 3D points for radius counting and nearest-neighbor
// queries. Exact (no approximation): callers get identical results to a brute
// force scan, only faster.
class GridIndex {
 public:
  GridIndex(const std::vector<Eigen::Vector3d>& points, double cell_size);

  std::size_t size() const { return points_.size(); }

  // Number of indexed points with |p - q| <= radius.
  int count_within(const Eigen::Vector3d& q, double radius) const;

  // Invokes fn(index) for every indexed point with |p - q| <= radius.
  void for_each_within(const Eigen::Vector3d& q, double radius,
                       const std::function<void(int)>& fn) const;

  // Index and distance of the closest indexed point; (-1, inf) when empty.
  std::pair<int, double> nearest(const Eigen::Vector3d& q) const;

 private:
  using Cell = std::array<std::int64_t, 3>;

  Cell cell_of(const Eigen::Vector3d& p) const;
  static std::uint64_t key_of(const Cell& c);

  std::vector<Eigen::Vector3d> points_;
  double cell_size_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
  Cell lo_{0, 0, 0};
  Cell hi_{0, 0, 0};
};

}  // namespace radarvi
