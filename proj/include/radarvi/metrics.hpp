#pragma once

#include <vector>

#include <Eigen/Core>

namespace radarvi {

// Result of screening a radar cloud against a reference (truth) cloud with
// distance threshold delta: points whose nearest reference neighbor lies
// within delta are valid, the rest are clutter.
struct ClutterSplit {
  std::vector<int> valid;    // indices into the evaluated cloud
  std::vector<int> clutter;  // complementary indices
};

struct MetricReport {
  int rpcdl = 0;          // valid-point count (radar point cloud density level)
  int clutter_count = 0;
  double chamfer = 0.0;
  double modified_hausdorff = 0.0;
};

// Splits cloud points by nearest-neighbor distance to truth. Throws
// EmptyTruth when truth is empty.
ClutterSplit clutter_split(const std::vector<Eigen::Vector3d>& cloud,
                           const std::vector<Eigen::Vector3d>& truth, double delta);

// Number of cloud points within delta of the truth cloud.
int rpcdl(const std::vector<Eigen::Vector3d>& cloud, const std::vector<Eigen::Vector3d>& truth,
          double delta);

// Symmetric Chamfer distance: mean of the two directed mean nearest-neighbor
// distances. Throws EmptyCloud when either cloud is empty.
double chamfer(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b);

// Modified Hausdorff distance: max of the two directed median nearest-
// neighbor distances. Throws EmptyCloud when either cloud is empty.
double modified_hausdorff(const std::vector<Eigen::Vector3d>& a,
                          const std::vector<Eigen::Vector3d>& b);

// Full report of one cloud against truth.
MetricReport evaluate_cloud(const std::vector<Eigen::Vector3d>& cloud,
                            const std::vector<Eigen::Vector3d>& truth, double delta);

// Nearest-neighbor distance from each query point to the target cloud.
// Brute force up to 1000 target points, grid-accelerated beyond; the results
// are identical either way.
std::vector<double> nearest_distances(const std::vector<Eigen::Vector3d>& queries,
                                      const std::vector<Eigen::Vector3d>& target);

}  // namespace radarvi
