#pragma once

#include <Eigen/Core>

#include "radarvi/types.hpp"

namespace radarvi {

// Depth at or below this threshold counts as "behind the camera".
inline constexpr double kMinDepth = 1e-9;

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Pinhole projection of a camera-frame point.
PixelHomogeneous project(const CameraIntrinsics& K, const Eigen::Vector3d& p);

// Pixel that the translated point (p + delta) produces in the same camera:
// the previous frame's pseudo observation of a moved feature.
PixelHomogeneous pseudo_projection_prev(const CameraIntrinsics& K, const Eigen::Vector3d& p,
                                        const Eigen::Vector3d& delta);

// Normalized-plane projection of p through the inter-frame transform T
// (previous -> current); returns the current frame's pseudo observation of a
// feature that did not move. No intrinsics are applied.
PixelHomogeneous pseudo_projection_curr(const RigidTransform& T, const Eigen::Vector3d& p);

// Cosine of the angle between two nonzero vectors, clamped to [-1, 1].
double cos_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

// K^-1 applied to a homogeneous pixel; third component stays one.
Eigen::Vector3d normalized_pixel(const CameraIntrinsics& K, const PixelHomogeneous& px);

// Stacked 6-component residual of one tracked feature against its predicted
// measurements. Rows 0-1 are the two cosine-law closures (previous and
// current frame; both evaluated in normalized coordinates so that the metric
// law of cosines holds exactly), rows 2-3 the previous-frame pixel
// reprojection, rows 4-5 the current-frame normalized reprojection.
Vector6d track_residual(const CameraIntrinsics& K, const RigidTransform& T,
                        const DynamicFeatureState& state, const FeatureTrack& track);

}  // namespace radarvi
