#include "radarvi/rigid_motion.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "radarvi/errors.hpp"

namespace radarvi {
namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& theta) {
  const double angle = theta.norm();
  if (angle < 1e-12) return Eigen::Matrix3d::Identity() + skew(theta);
  return Eigen::AngleAxisd(angle, theta / angle).toRotationMatrix();
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

}  // namespace

std::vector<PointPair> select_static(const ScenePointSet& set) {
  set.validate();
  std::vector<PointPair> pairs;
  for (std::size_t i = 0; i < set.size(); ++i) {
    // Probability >= 0.5 marks a moving point; only static points supervise
    // the ego transform.
    if (set.moving_prob[i] < 0.5)
      pairs.emplace_back(set.points[i], set.points[i] + set.flow[i]);
  }
  if (pairs.size() < 3)
    throw TooFewStatic("need at least three static points for transform estimation");
  return pairs;
}

RigidTransform kabsch(const std::vector<PointPair>& pairs, const std::vector<double>& weights) {
  if (pairs.size() < 3)
    throw DegenerateConfiguration("kabsch needs at least three correspondences");
  if (!weights.empty() && weights.size() != pairs.size())
    throw InvalidConfig("kabsch weights must match correspondence count");

  double wsum = 0.0;
  Eigen::Vector3d cs = Eigen::Vector3d::Zero();
  Eigen::Vector3d cd = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w < 0.0) throw InvalidConfig("kabsch weights must be non-negative");
    wsum += w;
    cs += w * pairs[i].first;
    cd += w * pairs[i].second;
  }
  if (!(wsum > 0.0)) throw InvalidConfig("kabsch weights must not all vanish");
  cs /= wsum;
  cd /= wsum;

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    h += w * (pairs[i].first - cs) * (pairs[i].second - cd).transpose();
  }
  h /= wsum;

  // Collinear (or coincident) source points leave the rotation about the
  // line unconstrained; detect this on the centered source matrix, not on H,
  // so a degenerate destination cannot mask it.
  Eigen::MatrixXd centered(pairs.size(), 3);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    centered.row(i) = std::sqrt(w) * (pairs[i].first - cs).transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> source_svd(centered);
  const auto& ssv = source_svd.singularValues();
  if (!(ssv(1) >= 1e-9 * ssv(0)))
    throw DegenerateConfiguration("source points are collinear");

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant();
  const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
  return {r, cd - r * cs};
}

double transform_consistency_loss(const RigidTransform& estimate, const RigidTransform& reference,
                                  const std::vector<Eigen::Vector3d>& points) {
  if (points.empty()) throw EmptyPointSet("consistency loss needs at least one point");
  const Eigen::Matrix3d m =
      reference.rotation.transpose() * estimate.rotation - Eigen::Matrix3d::Identity();
  const Eigen::Vector3d dt = reference.translation - estimate.translation;
  double sum = 0.0;
  for (const Eigen::Vector3d& f : points) sum += (m * f + dt).norm();
  return sum / static_cast<double>(points.size());
}

RigidTransform pose_at(const PoseStream& stream, double t) {
  stream.validate();
  if (stream.empty()) throw OutOfRange("pose stream is empty");
  constexpr double kSlack = 1e-9;
  if (t < stream.begin_time() - kSlack || t > stream.end_time() + kSlack)
    throw OutOfRange("query time outside pose stream span");
  const double tc = std::clamp(t, stream.begin_time(), stream.end_time());

  const auto it = std::lower_bound(
      stream.samples.begin(), stream.samples.end(), tc,
      [](const PoseSample& s, double v) { return s.timestamp < v; });
  if (it == stream.samples.begin()) return it->pose;
  if (it == stream.samples.end()) return stream.samples.back().pose;
  const PoseSample& b = *it;
  const PoseSample& a = *(it - 1);
  const double u = (tc - a.timestamp) / (b.timestamp - a.timestamp);

  RigidTransform out;
  out.translation = (1.0 - u) * a.pose.translation + u * b.pose.translation;
  out.rotation = a.pose.quaternion().slerp(u, b.pose.quaternion()).toRotationMatrix();
  return out;
}

RigidTransform relative_transform(const PoseStream& stream, double t_a, double t_b) {
  return pose_at(stream, t_a).inverse() * pose_at(stream, t_b);
}

PoseStream fuse_pose_streams(const PoseStream& absolute, const PoseStream& relative,
                             const EkfOptions& opts, EkfDiagnostics* diagnostics) {
  absolute.validate();
  relative.validate();
  if (absolute.empty() || relative.empty())
    throw NoTemporalOverlap("pose fusion needs non-empty streams");

  constexpr double kSlack = 1e-9;
  std::vector<const PoseSample*> updates;
  for (const PoseSample& s : absolute.samples)
    if (s.timestamp >= relative.begin_time() - kSlack &&
        s.timestamp <= relative.end_time() + kSlack)
      updates.push_back(&s);
  if (updates.empty()) throw NoTemporalOverlap("pose streams share no time span");

  using Mat9 = Eigen::Matrix<double, 9, 9>;
  using Vec9 = Eigen::Matrix<double, 9, 1>;
  using Mat69 = Eigen::Matrix<double, 6, 9>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  // Nominal state: pose plus an estimate of the relative stream's constant
  // drift velocity, which the propagation subtracts out.
  RigidTransform nominal = updates.front()->pose;
  Eigen::Vector3d drift_vel = Eigen::Vector3d::Zero();
  double t_prev = updates.front()->timestamp;

  Mat9 p = Mat9::Zero();
  p.block<3, 3>(0, 0) = opts.init_sigma_pos * opts.init_sigma_pos * Eigen::Matrix3d::Identity();
  p.block<3, 3>(3, 3) = opts.init_sigma_rot * opts.init_sigma_rot * Eigen::Matrix3d::Identity();
  p.block<3, 3>(6, 6) = opts.init_sigma_vel * opts.init_sigma_vel * Eigen::Matrix3d::Identity();

  Mat6 r_meas = Mat6::Zero();
  r_meas.block<3, 3>(0, 0) =
      opts.sigma_meas_pos * opts.sigma_meas_pos * Eigen::Matrix3d::Identity();
  r_meas.block<3, 3>(3, 3) =
      opts.sigma_meas_rot * opts.sigma_meas_rot * Eigen::Matrix3d::Identity();

  Mat69 h = Mat69::Zero();
  h.block<3, 3>(0, 0) = Eigen::Matrix3d::Identity();
  h.block<3, 3>(3, 3) = Eigen::Matrix3d::Identity();

  PoseStream fused;
  fused.samples.push_back({t_prev, nominal});

  for (std::size_t k = 1; k < updates.size(); ++k) {
    const double t_k = updates[k]->timestamp;
    const double dt = t_k - t_prev;

    // Propagate with the relative stream's motion increment, drift-corrected.
    const RigidTransform inc = relative_transform(relative, t_prev, t_k);
    const Eigen::Vector3d world_step = nominal.rotation * inc.translation;
    nominal.translation += world_step - drift_vel * dt;
    nominal.rotation = nominal.rotation * inc.rotation;

    Mat9 f = Mat9::Identity();
    f.block<3, 3>(0, 3) = -skew(world_step);
    f.block<3, 3>(0, 6) = -dt * Eigen::Matrix3d::Identity();
    Mat9 q = Mat9::Zero();
    q.block<3, 3>(0, 0) =
        opts.sigma_process_pos * opts.sigma_process_pos * dt * Eigen::Matrix3d::Identity();
    q.block<3, 3>(3, 3) =
        opts.sigma_process_rot * opts.sigma_process_rot * dt * Eigen::Matrix3d::Identity();
    q.block<3, 3>(6, 6) =
        opts.sigma_process_vel * opts.sigma_process_vel * dt * Eigen::Matrix3d::Identity();
    p = f * p * f.transpose() + q;
    p = 0.5 * (p + p.transpose()).eval();
    if (diagnostics) diagnostics->trace_before.push_back(p.trace());

    // Absolute pose update, Joseph form.
    Vec6 innovation;
    innovation.head<3>() = updates[k]->pose.translation - nominal.translation;
    innovation.tail<3>() = log_so3(updates[k]->pose.rotation * nominal.rotation.transpose());
    const Mat6 s = h * p * h.transpose() + r_meas;
    const Eigen::Matrix<double, 9, 6> gain = p * h.transpose() * s.ldlt().solve(Mat6::Identity());
    const Vec9 dx = gain * innovation;
    const Mat9 ikh = Mat9::Identity() - gain * h;
    p = ikh * p * ikh.transpose() + gain * r_meas * gain.transpose();
    p = 0.5 * (p + p.transpose()).eval();
    if (diagnostics) diagnostics->trace_after.push_back(p.trace());

    nominal.translation += dx.head<3>();
    nominal.rotation = exp_so3(dx.segment<3>(3)) * nominal.rotation;
    drift_vel += dx.tail<3>();

    fused.samples.push_back({t_k, nominal});
    t_prev = t_k;
  }
  return fused;
}

}  // namespace radarvi
