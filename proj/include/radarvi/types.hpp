#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "radarvi/errors.hpp"

namespace radarvi {

// Point labels used throughout: -1 unknown, 0 static background, j >= 1 the
// j-th dynamic object.
inline constexpr int kLabelUnknown = -1;
inline constexpr int kLabelBackground = 0;

// Pinhole intrinsics; pixels are (u, v) with u along +x, v along +y, z forward.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidConfig("camera focal lengths must be positive");
  }
};

// Homogeneous pixel; the third component is one by construction.
struct PixelHomogeneous {
  double u = 0.0;
  double v = 0.0;

  Eigen::Vector3d vec() const { return {u, v, 1.0}; }
};

// Proper rigid transform x -> R x + t.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
    return {q.normalized().toRotationMatrix(), t};
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  // Composition: (a * b)(x) == a(b(x)).
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation); }

  bool is_valid(double tol = 1e-9) const {
    const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && std::abs(rotation.determinant() - 1.0) <= tol &&
           translation.allFinite();
  }
};

// A visual feature observed in two consecutive camera frames.
struct FeatureTrack {
  PixelHomogeneous prev_pixel;
  PixelHomogeneous curr_pixel;
  int object_id = kLabelBackground;  // 0 static, j >= 1 dynamic object j
};

// Reconstruction state of one tracked feature: its 3D position in the
// previous camera frame plus the object translation over the frame gap
// (shared by all features of the same rigid object).
struct DynamicFeatureState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// One radar point-cloud frame. `spurious` is the filter verdict (1 = flagged);
// it is empty until a filter has run.
struct PointCloudFrame {
  double timestamp = 0.0;
  std::vector<Eigen::Vector3d> points;
  std::vector<int> labels;
  std::vector<std::uint8_t> spurious;

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (labels.size() != points.size())
      throw InvalidConfig("point cloud labels must match point count");
    if (!spurious.empty() && spurious.size() != points.size())
      throw InvalidConfig("point cloud spurious flags must match point count");
  }
};

// A timestamped pose. Poses map sensor coordinates to world coordinates.
struct PoseSample {
  double timestamp = 0.0;
  RigidTransform pose;
};

// Sequence of timestamped poses with strictly increasing timestamps.
struct PoseStream {
  std::vector<PoseSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double begin_time() const { return samples.front().timestamp; }
  double end_time() const { return samples.back().timestamp; }

  void validate() const {
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (!(samples[i].timestamp > samples[i - 1].timestamp))
        throw NonMonotonicTimestamps("pose stream timestamps must strictly increase");
  }
};

// Scene-flow supervision over one radar frame: per point a predicted
// displacement to the next frame and a moving probability in [0, 1].
struct ScenePointSet {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> flow;
  std::vector<double> moving_prob;

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (flow.size() != points.size() || moving_prob.size() != points.size())
      throw InvalidConfig("scene point set arrays must have equal length");
    for (double m : moving_prob)
      if (!(m >= 0.0 && m <= 1.0))
        throw InvalidConfig("moving probabilities must lie in [0, 1]");
  }
};

}  // namespace radarvi
