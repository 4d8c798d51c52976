#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "radarvi/types.hpp"

namespace radarvi {

// Correspondence pair (source point, destination point).
using PointPair = std::pair<Eigen::Vector3d, Eigen::Vector3d>;

// Extracts (point, point + flow) pairs for every point whose moving
// probability is below 0.5. Throws TooFewStatic when fewer than three static
// points remain.
std::vector<PointPair> select_static(const ScenePointSet& set);

// Weighted Kabsch: the proper rigid transform minimizing
// sum_i w_i |R src_i + t - dst_i|^2. Empty weights mean uniform. Throws
// DegenerateConfiguration for fewer than three pairs or (near-)collinear
// sources.
RigidTransform kabsch(const std::vector<PointPair>& pairs,
                      const std::vector<double>& weights = {});

// Mean per-point inconsistency between an estimated and a reference
// transform, evaluated on the given points:
//   (1/M) sum_i | (R^T R_hat - I) f_i + t - t_hat |.
// Zero iff the transforms agree on every point. Throws EmptyPointSet.
double transform_consistency_loss(const RigidTransform& estimate, const RigidTransform& reference,
                                  const std::vector<Eigen::Vector3d>& points);

// Pose interpolated at time t (linear translation, slerp rotation). Throws
// OutOfRange outside the stream's time span.
RigidTransform pose_at(const PoseStream& stream, double t);

// Relative transform mapping coordinates at time t_b into coordinates at time
// t_a: pose(t_a)^-1 * pose(t_b).
RigidTransform relative_transform(const PoseStream& stream, double t_a, double t_b);

struct EkfOptions {
  double sigma_process_pos = 1e-3;   // m / sqrt(step), propagation position noise
  double sigma_process_rot = 1e-4;   // rad / sqrt(step)
  double sigma_process_vel = 1e-2;   // m/s / sqrt(step), drift-rate random walk
  double sigma_meas_pos = 0.05;      // m, absolute position measurement noise
  double sigma_meas_rot = 0.01;      // rad
  double init_sigma_pos = 0.1;
  double init_sigma_rot = 0.05;
  double init_sigma_vel = 0.1;
};

// Per-update covariance traces, exposed for validation.
struct EkfDiagnostics {
  std::vector<double> trace_before;
  std::vector<double> trace_after;
};

// Error-state EKF fusing a low-rate absolute pose stream (measurements) with
// a high-rate relative stream whose absolute positions may drift linearly
// (propagation). State: position, small-angle attitude and drift-velocity
// errors. Returns fused poses at the absolute stream's timestamps. Throws
// NoTemporalOverlap when the streams share no time span.
PoseStream fuse_pose_streams(const PoseStream& absolute, const PoseStream& relative,
                             const EkfOptions& options = {}, EkfDiagnostics* diagnostics = nullptr);

}  // namespace radarvi
