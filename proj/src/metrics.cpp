#include "radarvi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "radarvi/errors.hpp"
#include "radarvi/grid_index.hpp"

namespace radarvi {
namespace {

constexpr std::size_t kBruteForceLimit = 1000;

// Median with the even-count convention of averaging the two middle values.
double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

double grid_cell_for(const std::vector<Eigen::Vector3d>& target) {
  Eigen::Vector3d lo = target.front();
  Eigen::Vector3d hi = target.front();
  for (const Eigen::Vector3d& p : target) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = (hi - lo).norm();
  const double cell = diag / std::cbrt(static_cast<double>(target.size()));
  return std::max(cell, 1e-6);
}

}  // namespace

std::vector<double> nearest_distances(const std::vector<Eigen::Vector3d>& queries,
                                      const std::vector<Eigen::Vector3d>& target) {
  if (target.empty()) throw EmptyCloud("nearest-neighbor target cloud is empty");
  std::vector<double> out(queries.size());
  if (target.size() <= kBruteForceLimit) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      double best2 = std::numeric_limits<double>::infinity();
      for (const Eigen::Vector3d& t : target)
        best2 = std::min(best2, (queries[i] - t).squaredNorm());
      out[i] = std::sqrt(best2);
    }
  } else {
    const GridIndex index(target, grid_cell_for(target));
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = index.nearest(queries[i]).second;
  }
  return out;
}

ClutterSplit clutter_split(const std::vector<Eigen::Vector3d>& cloud,
                           const std::vector<Eigen::Vector3d>& truth, double delta) {
  if (truth.empty()) throw EmptyTruth("clutter split needs a non-empty truth cloud");
  if (!(delta > 0.0)) throw InvalidConfig("clutter threshold must be positive");
  ClutterSplit split;
  if (cloud.empty()) return split;
  const std::vector<double> d = nearest_distances(cloud, truth);
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    if (d[i] <= delta)
      split.valid.push_back(i);
    else
      split.clutter.push_back(i);
  }
  return split;
}

int rpcdl(const std::vector<Eigen::Vector3d>& cloud, const std::vector<Eigen::Vector3d>& truth,
          double delta) {
  return static_cast<int>(clutter_split(cloud, truth, delta).valid.size());
}

double chamfer(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b) {
  if (a.empty() || b.empty()) throw EmptyCloud("chamfer distance needs non-empty clouds");
  const std::vector<double> dab = nearest_distances(a, b);
  const std::vector<double> dba = nearest_distances(b, a);
  const double mab =
      std::accumulate(dab.begin(), dab.end(), 0.0) / static_cast<double>(dab.size());
  const double mba =
      std::accumulate(dba.begin(), dba.end(), 0.0) / static_cast<double>(dba.size());
  return 0.5 * (mab + mba);
}

double modified_hausdorff(const std::vector<Eigen::Vector3d>& a,
                          const std::vector<Eigen::Vector3d>& b) {
  if (a.empty() || b.empty()) throw EmptyCloud("modified Hausdorff needs non-empty clouds");
  const double mab = median(nearest_distances(a, b));
  const double mba = median(nearest_distances(b, a));
  return std::max(mab, mba);
}

MetricReport evaluate_cloud(const std::vector<Eigen::Vector3d>& cloud,
                            const std::vector<Eigen::Vector3d>& truth, double delta) {
  MetricReport report;
  const ClutterSplit split = clutter_split(cloud, truth, delta);
  report.rpcdl = static_cast<int>(split.valid.size());
  report.clutter_count = static_cast<int>(split.clutter.size());
  if (!cloud.empty()) {
    report.chamfer = chamfer(cloud, truth);
    report.modified_hausdorff = modified_hausdorff(cloud, truth);
  } else {
    report.chamfer = std::numeric_limits<double>::infinity();
    report.modified_hausdorff = std::numeric_limits<double>::infinity();
  }
  return report;
}

}  // namespace radarvi
