#include "radarvi/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "radarvi/errors.hpp"

namespace radarvi {

PixelHomogeneous project(const CameraIntrinsics& K, const Eigen::Vector3d& p) {
  if (!(p.z() > kMinDepth)) throw NonPositiveDepth("projection requires depth > 1e-9");
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

PixelHomogeneous pseudo_projection_prev(const CameraIntrinsics& K, const Eigen::Vector3d& p,
                                        const Eigen::Vector3d& delta) {
  return project(K, p + delta);
}

PixelHomogeneous pseudo_projection_curr(const RigidTransform& T, const Eigen::Vector3d& p) {
  const Eigen::Vector3d q = T.apply(p);
  if (!(q.z() > kMinDepth)) throw NonPositiveDepth("transformed point has depth <= 1e-9");
  return {q.x() / q.z(), q.y() / q.z()};
}

double cos_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cos_angle requires nonzero vectors");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

Eigen::Vector3d normalized_pixel(const CameraIntrinsics& K, const PixelHomogeneous& px) {
  return {(px.u - K.cx) / K.fx, (px.v - K.cy) / K.fy, 1.0};
}

Vector6d track_residual(const CameraIntrinsics& K, const RigidTransform& T,
                        const DynamicFeatureState& state, const FeatureTrack& track) {
  const Eigen::Vector3d& p = state.position;       // feature at previous time, previous frame
  const Eigen::Vector3d q = p + state.translation;  // feature at current time, previous frame
  if (!(p.z() > kMinDepth) || !(q.z() > kMinDepth))
    throw NonPositiveDepth("feature depth <= 1e-9 in previous frame");
  const Eigen::Vector3d pc = T.apply(p);  // feature at previous time, current frame
  const Eigen::Vector3d qc = T.apply(q);  // feature at current time, current frame
  if (!(pc.z() > kMinDepth) || !(qc.z() > kMinDepth))
    throw NonPositiveDepth("feature depth <= 1e-9 in current frame");

  // Observed rays and pseudo rays in normalized coordinates. Homogeneous
  // normalized vectors are positive multiples of the camera-frame points, so
  // the angles below are the true inter-ray angles.
  const Eigen::Vector3d p_obs = normalized_pixel(K, track.prev_pixel);
  const Eigen::Vector3d q_obs = normalized_pixel(K, track.curr_pixel);
  const Eigen::Vector3d m_ray(q.x() / q.z(), q.y() / q.z(), 1.0);
  const Eigen::Vector3d n_ray(pc.x() / pc.z(), pc.y() / pc.z(), 1.0);

  const double rp = p.norm();
  const double rq = q.norm();
  const double rpc = pc.norm();
  const double rqc = qc.norm();
  const double dd2 = state.translation.squaredNorm();

  Vector6d e;
  // Law-of-cosines closure in both frames: the triangle (camera, feature
  // before, feature after) has third side |delta|.
  e(0) = dd2 - (rp * rp + rq * rq - 2.0 * rp * rq * cos_angle(p_obs, m_ray));
  e(1) = dd2 - (rpc * rpc + rqc * rqc - 2.0 * rpc * rqc * cos_angle(q_obs, n_ray));

  const PixelHomogeneous p_pred = project(K, p);
  e(2) = track.prev_pixel.u - p_pred.u;
  e(3) = track.prev_pixel.v - p_pred.v;

  const PixelHomogeneous q_pred{qc.x() / qc.z(), qc.y() / qc.z()};
  e(4) = q_obs.x() - q_pred.u;
  e(5) = q_obs.y() - q_pred.v;
  return e;
}

}  // namespace radarvi
