#include "radarvi/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Geometry>

#include "radarvi/errors.hpp"
#include "radarvi/geometry.hpp"
#include "radarvi/io.hpp"
#include "radarvi/rng.hpp"

namespace radarvi::sim {
namespace {

using io::json;

// Named RNG substreams; every draw in the generator flows from
// (config.seed, stream, index).
enum Stream : std::uint64_t {
  kStreamObjectShape = 1,
  kStreamBackground = 2,
  kStreamMirrorSelect = 3,
  kStreamMirrorFrame = 4,
  kStreamRadarNoise = 5,
  kStreamPixelNoise = 6,
  kStreamFlowNoise = 7,
  kStreamViNoise = 8,
  kStreamRdm = 9,
};

// Minimum camera-frame depth for a feature to be emitted as a track.
constexpr double kMinTrackDepth = 0.05;

Eigen::Matrix3d rot_z(double yaw) {
  Eigen::Matrix3d r;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

// One world-frame real point: either background or an object surface sample.
struct RealPoint {
  int label = kLabelBackground;   // 0 background, j >= 1 object j
  int object_index = -1;          // -1 for background
  Eigen::Vector3d base;           // world position at t = 0 (background: fixed)
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  bool radar_visible = true;      // false: ground truth only (radar_dropout)

  Eigen::Vector3d world_at(double t) const { return base + velocity * t; }
};

std::vector<Eigen::Vector3d> sample_object_points(const ObjectConfig& obj, Rng& rng) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(obj.point_count);
  if (obj.shape == ObjectConfig::Shape::kSphere) {
    for (int i = 0; i < obj.point_count; ++i) out.push_back(obj.radius * rng.unit_vector());
    return out;
  }
  const Eigen::Vector3d h = 0.5 * obj.extent;
  // Face picked proportionally to its area, then uniform within the face.
  const double areas[3] = {obj.extent.y() * obj.extent.z(), obj.extent.x() * obj.extent.z(),
                           obj.extent.x() * obj.extent.y()};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  for (int i = 0; i < obj.point_count; ++i) {
    double pick = rng.uniform(0.0, total);
    int axis = 0;
    double sign = 1.0;
    for (int a = 0; a < 3; ++a) {
      if (pick < areas[a]) {
        axis = a;
        sign = 1.0;
        break;
      }
      pick -= areas[a];
      if (pick < areas[a]) {
        axis = a;
        sign = -1.0;
        break;
      }
      pick -= areas[a];
    }
    Eigen::Vector3d p;
    p[axis] = sign * h[axis];
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    p[u] = rng.uniform(-h[u], h[u]);
    p[v] = rng.uniform(-h[v], h[v]);
    out.push_back(p);
  }
  return out;
}

std::vector<RealPoint> build_real_points(const SceneConfig& config) {
  std::vector<RealPoint> pts;
  Rng bg_rng = Rng::derive(config.seed, kStreamBackground);
  for (int i = 0; i < config.background.point_count; ++i)
    pts.push_back({kLabelBackground, -1, bg_rng.uniform_box(config.background.lo,
                                                            config.background.hi)});
  for (int j = 0; j < static_cast<int>(config.objects.size()); ++j) {
    const ObjectConfig& obj = config.objects[j];
    const int kept = obj.point_count -
                     static_cast<int>(std::lround(obj.radar_dropout * obj.point_count));
    Rng rng = Rng::derive(config.seed, kStreamObjectShape, static_cast<std::uint64_t>(j));
    const auto locals = sample_object_points(obj, rng);
    for (int s = 0; s < static_cast<int>(locals.size()); ++s)
      pts.push_back({j + 1, j, obj.center + locals[s], obj.velocity, s < kept});
  }
  return pts;
}

// Row index of each visual feature within the real-point list: background
// features first, then per object.
std::vector<int> feature_rows(const SceneConfig& config) {
  std::vector<int> rows;
  for (int i = 0; i < config.background.feature_count; ++i) rows.push_back(i);
  int base = config.background.point_count;
  for (const ObjectConfig& obj : config.objects) {
    for (int i = 0; i < obj.feature_count; ++i) rows.push_back(base + i);
    base += obj.point_count;
  }
  return rows;
}

Eigen::Vector3d sensor_velocity_at(const SceneConfig& config, double t) {
  const TrajectoryConfig& tr = config.trajectory;
  if (tr.type == TrajectoryConfig::Type::kConstantVelocity) return tr.velocity;
  const auto& wp = tr.waypoints;
  if (wp.size() < 2 || t <= wp.front().time || t >= wp.back().time)
    return Eigen::Vector3d::Zero();
  for (std::size_t i = 1; i < wp.size(); ++i)
    if (t < wp[i].time)
      return (wp[i].position - wp[i - 1].position) / (wp[i].time - wp[i - 1].time);
  return Eigen::Vector3d::Zero();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidConfig(message);
}

}  // namespace

Eigen::Matrix3d camera_from_sensor() {
  // Sensor: x right, y forward, z up. Camera: x right, y down, z forward.
  Eigen::Matrix3d r;
  r << 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0;
  return r;
}

int SceneConfig::frame_count() const {
  return static_cast<int>(std::floor(duration * frame_rate + 1e-9));
}

void SceneConfig::validate() const {
  require(frame_rate > 0.0, "frame_rate must be positive");
  require(duration >= 2.0 / frame_rate, "duration must cover at least two frames");
  intrinsics.validate();
  require(image_width > 0 && image_height > 0, "image dimensions must be positive");
  require(pixel_noise_sigma >= 0.0, "pixel_noise_sigma must be non-negative");
  if (trajectory.type == TrajectoryConfig::Type::kWaypoints) {
    require(!trajectory.waypoints.empty(), "waypoint trajectory needs waypoints");
    for (std::size_t i = 1; i < trajectory.waypoints.size(); ++i)
      require(trajectory.waypoints[i].time > trajectory.waypoints[i - 1].time,
              "waypoint times must strictly increase");
  }
  require(background.point_count >= 0, "background point_count must be non-negative");
  require(background.feature_count >= 0 && background.feature_count <= background.point_count,
          "background feature_count must not exceed point_count");
  require((background.hi - background.lo).minCoeff() >= 0.0,
          "background box must have hi >= lo");
  for (const ObjectConfig& obj : objects) {
    require(obj.point_count >= 1, "object point_count must be at least 1");
    require(obj.feature_count >= 0 && obj.feature_count <= obj.point_count,
            "object feature_count must not exceed point_count");
    require(obj.radar_dropout >= 0.0 && obj.radar_dropout < 1.0,
            "radar_dropout must lie in [0, 1)");
    require(obj.point_count - static_cast<int>(std::lround(obj.radar_dropout *
                                                           obj.point_count)) >= 1,
            "radar_dropout must leave at least one radar-visible sample");
    if (obj.shape == ObjectConfig::Shape::kBox)
      require(obj.extent.minCoeff() > 0.0, "box extents must be positive");
    else
      require(obj.radius > 0.0, "sphere radius must be positive");
  }
  for (const ReflectorPlane& plane : reflectors)
    require(plane.normal.norm() > 1e-12, "reflector normal must be nonzero");
  require(radar.point_noise_sigma >= 0.0, "radar point_noise_sigma must be non-negative");
  require(radar.spurious_fraction >= 0.0 && radar.spurious_fraction <= 1.0,
          "spurious_fraction must lie in [0, 1]");
  require(radar.persistence >= 0.0 && radar.persistence <= 1.0,
          "persistence must lie in [0, 1]");
  require(radar.spurious_fraction <= radar.persistence || radar.spurious_fraction == 0.0,
          "spurious_fraction (per-frame target) cannot exceed persistence");
  require(radar.min_mirror_clearance >= 0.0, "min_mirror_clearance must be non-negative");
  if (radar.rdm.enabled) {
    require(radar.rdm.range_bins >= 8 && radar.rdm.doppler_bins >= 8,
            "RDM needs at least 8x8 bins");
    require(radar.rdm.range_res > 0.0 && radar.rdm.doppler_res > 0.0,
            "RDM resolutions must be positive");
    require(radar.rdm.noise_power > 0.0, "RDM noise_power must be positive");
  }
  require(flow.noise_sigma >= 0.0, "flow noise_sigma must be non-negative");
  require(flow.label_flip_prob >= 0.0 && flow.label_flip_prob <= 1.0,
          "label_flip_prob must lie in [0, 1]");
  require(poses.vi_noise_sigma >= 0.0, "vi_noise_sigma must be non-negative");
  require(poses.inertial_rate >= frame_rate, "inertial_rate must be at least frame_rate");
  require(poses.drift_rate >= 0.0, "drift_rate must be non-negative");
  if (poses.drift_rate > 0.0)
    require(poses.drift_direction.norm() > 1e-12, "drift_direction must be nonzero");
}

RigidTransform sensor_pose_at(const SceneConfig& config, double t) {
  const TrajectoryConfig& tr = config.trajectory;
  if (tr.type == TrajectoryConfig::Type::kConstantVelocity)
    return {rot_z(tr.yaw + tr.yaw_rate * t), tr.start + tr.velocity * t};

  const auto& wp = tr.waypoints;
  if (t <= wp.front().time) return {rot_z(wp.front().yaw), wp.front().position};
  if (t >= wp.back().time) return {rot_z(wp.back().yaw), wp.back().position};
  for (std::size_t i = 1; i < wp.size(); ++i) {
    if (t < wp[i].time) {
      const double u = (t - wp[i - 1].time) / (wp[i].time - wp[i - 1].time);
      const Eigen::Vector3d p = (1.0 - u) * wp[i - 1].position + u * wp[i].position;
      const double yaw = (1.0 - u) * wp[i - 1].yaw + u * wp[i].yaw;
      return {rot_z(yaw), p};
    }
  }
  return {rot_z(wp.back().yaw), wp.back().position};
}

SceneData generate_scene(const SceneConfig& config) {
  config.validate();
  SceneData data;
  data.config = config;

  const int n_frames = config.frame_count();
  const std::vector<RealPoint> real = build_real_points(config);
  const int n_real = static_cast<int>(real.size());
  std::vector<int> visible_rows;  // emitted-cloud row -> real-point index
  for (int i = 0; i < n_real; ++i)
    if (real[i].radar_visible) visible_rows.push_back(i);
  const Eigen::Matrix3d r_cs = camera_from_sensor();  // sensor -> camera
  const Eigen::Matrix3d r_sc = r_cs.transpose();

  // Frame timestamps and exact poses.
  std::vector<double> times(n_frames);
  std::vector<RigidTransform> sensor_poses(n_frames);
  std::vector<RigidTransform> camera_poses(n_frames);  // camera -> world
  for (int k = 0; k < n_frames; ++k) {
    times[k] = static_cast<double>(k) / config.frame_rate;
    sensor_poses[k] = sensor_pose_at(config, times[k]);
    camera_poses[k] = sensor_poses[k] * RigidTransform{r_sc, Eigen::Vector3d::Zero()};
    data.truth.sensor_poses.samples.push_back({times[k], sensor_poses[k]});
  }

  // Mirror candidates: a fixed subset of the radar-visible points, selected
  // once so that candidate_prob * persistence equals the per-frame target.
  std::vector<int> candidates;
  if (!config.reflectors.empty() && config.radar.spurious_fraction > 0.0) {
    const double candidate_prob =
        std::min(1.0, config.radar.spurious_fraction / config.radar.persistence);
    Rng rng = Rng::derive(config.seed, kStreamMirrorSelect);
    for (int i : visible_rows)
      if (rng.bernoulli(candidate_prob)) candidates.push_back(i);
  }

  data.truth.mirror_flags.resize(n_frames);
  data.truth.mirror_source.resize(n_frames);
  data.truth.mirror_reflector.resize(n_frames);
  data.truth.clean_points.resize(n_frames);
  data.truth.clean_labels.resize(n_frames);

  // Per-frame clouds, provenance and RDMs.
  for (int k = 0; k < n_frames; ++k) {
    ObservedFrame frame;
    frame.index = k;
    frame.timestamp = times[k];
    frame.cloud.timestamp = times[k];
    const RigidTransform world_to_sensor = sensor_poses[k].inverse();

    auto& clean = data.truth.clean_points[k];
    auto& clean_labels = data.truth.clean_labels[k];
    for (const RealPoint& rp : real) {
      clean.push_back(world_to_sensor.apply(rp.world_at(times[k])));
      clean_labels.push_back(rp.label);
    }
    Rng noise_rng = Rng::derive(config.seed, kStreamRadarNoise, static_cast<std::uint64_t>(k));
    for (int i : visible_rows) {
      frame.cloud.points.push_back(clean[i] +
                                   noise_rng.normal3(config.radar.point_noise_sigma));
      frame.cloud.labels.push_back(real[i].label);
      data.truth.mirror_flags[k].push_back(0);
      data.truth.mirror_source[k].push_back(-1);
      data.truth.mirror_reflector[k].push_back(-1);
    }

    // Multipath mirrors: per frame each candidate appears with the
    // persistence probability, reflected exactly about a randomly picked
    // plane — temporally unstable by construction.
    if (!candidates.empty()) {
      Rng mirror_rng =
          Rng::derive(config.seed, kStreamMirrorFrame, static_cast<std::uint64_t>(k));
      for (int src : candidates) {
        const bool visible = mirror_rng.bernoulli(config.radar.persistence);
        const int plane_idx =
            static_cast<int>(mirror_rng.uniform_int(config.reflectors.size()));
        if (!visible) continue;
        const ReflectorPlane& plane = config.reflectors[plane_idx];
        const Eigen::Vector3d n = plane.normal.normalized();
        const Eigen::Vector3d x = real[src].world_at(times[k]);
        const double sd = n.dot(x) - plane.offset;
        if (std::abs(sd) < config.radar.min_mirror_clearance) continue;
        const Eigen::Vector3d mirrored = x - 2.0 * sd * n;
        frame.cloud.points.push_back(world_to_sensor.apply(mirrored));
        frame.cloud.labels.push_back(kLabelBackground);
        data.truth.mirror_flags[k].push_back(1);
        data.truth.mirror_source[k].push_back(src);
        data.truth.mirror_reflector[k].push_back(plane_idx);
      }
    }

    if (config.radar.rdm.enabled) {
      const RdmConfig& rc = config.radar.rdm;
      RangeDopplerMatrix rdm;
      rdm.range_bins = rc.range_bins;
      rdm.doppler_bins = rc.doppler_bins;
      rdm.range_res = rc.range_res;
      rdm.doppler_res = rc.doppler_res;
      const std::size_t cells = static_cast<std::size_t>(rc.range_bins) * rc.doppler_bins;
      rdm.power.resize(cells);
      rdm.azimuth.resize(cells);
      rdm.elevation.resize(cells);
      Rng rdm_rng = Rng::derive(config.seed, kStreamRdm, static_cast<std::uint64_t>(k));
      for (std::size_t c = 0; c < cells; ++c) rdm.power[c] = rdm_rng.exponential(rc.noise_power);
      // Default angle pattern: linear fan over a 90 deg azimuth and 60 deg
      // elevation field of view; target cells get the true angles below.
      for (int r = 0; r < rc.range_bins; ++r)
        for (int d = 0; d < rc.doppler_bins; ++d) {
          const std::size_t c = static_cast<std::size_t>(r) * rc.doppler_bins + d;
          rdm.azimuth[c] = ((d + 0.5) / rc.doppler_bins - 0.5) * (std::numbers::pi / 2.0);
          rdm.elevation[c] = ((r + 0.5) / rc.range_bins - 0.5) * (std::numbers::pi / 3.0);
        }
      const double snr = std::pow(10.0, rc.target_snr_db / 10.0);
      const Eigen::Vector3d v_sensor_w = sensor_velocity_at(config, times[k]);
      for (int i = 0; i < n_real; ++i) {
        const Eigen::Vector3d& p = clean[i];
        const double range = p.norm();
        if (range < 1e-9) continue;
        const Eigen::Vector3d v_rel_sensor =
            sensor_poses[k].rotation.transpose() * (real[i].velocity - v_sensor_w);
        const double v_radial = p.normalized().dot(v_rel_sensor);
        const int rb = static_cast<int>(std::lround(range / rc.range_res));
        const int db =
            static_cast<int>(std::lround(v_radial / rc.doppler_res)) + rc.doppler_bins / 2;
        if (rb < 0 || rb >= rc.range_bins || db < 0 || db >= rc.doppler_bins) continue;
        const std::size_t c = static_cast<std::size_t>(rb) * rc.doppler_bins + db;
        rdm.power[c] += snr * rc.noise_power;
        rdm.azimuth[c] = std::atan2(p.x(), p.y());
        rdm.elevation[c] = std::asin(std::clamp(p.z() / range, -1.0, 1.0));
      }
      frame.rdm = std::move(rdm);
    }

    data.frames.push_back(std::move(frame));
  }

  // Frame pairs: feature tracks, per-pair truth, and scene flow.
  const std::vector<int> rows = feature_rows(config);
  for (int k = 1; k < n_frames; ++k) {
    FramePair pair;
    pair.index = k;
    PairTruth pair_truth;
    pair_truth.index = k;
    const RigidTransform cam_prev_inv = camera_poses[k - 1].inverse();
    const RigidTransform cam_curr_inv = camera_poses[k].inverse();
    pair_truth.camera_transform = cam_curr_inv * camera_poses[k - 1];
    const double dt = times[k] - times[k - 1];

    std::map<int, ObjectTruth> truth_by_object;
    Rng px_rng = Rng::derive(config.seed, kStreamPixelNoise, static_cast<std::uint64_t>(k));
    for (int row : rows) {
      const RealPoint& rp = real[row];
      const Eigen::Vector3d p_cam = cam_prev_inv.apply(rp.world_at(times[k - 1]));
      const Eigen::Vector3d q_cam = cam_curr_inv.apply(rp.world_at(times[k]));
      if (p_cam.z() <= kMinTrackDepth || q_cam.z() <= kMinTrackDepth) continue;
      PixelHomogeneous p_px = project(config.intrinsics, p_cam);
      PixelHomogeneous q_px = project(config.intrinsics, q_cam);
      if (config.pixel_noise_sigma > 0.0) {
        p_px.u += px_rng.normal(0.0, config.pixel_noise_sigma);
        p_px.v += px_rng.normal(0.0, config.pixel_noise_sigma);
        q_px.u += px_rng.normal(0.0, config.pixel_noise_sigma);
        q_px.v += px_rng.normal(0.0, config.pixel_noise_sigma);
      }
      const auto inside = [&](const PixelHomogeneous& px) {
        return px.u >= 0.0 && px.u <= config.image_width && px.v >= 0.0 &&
               px.v <= config.image_height;
      };
      if (!inside(p_px) || !inside(q_px)) continue;

      FeatureTrack track{p_px, q_px, rp.label};
      ObjectTruth& ot = truth_by_object[rp.label];
      ot.object_id = rp.label;
      // Object displacement over the gap, expressed in the previous camera
      // frame; zero for static features.
      ot.delta_d = cam_prev_inv.rotation * (rp.velocity * dt);
      ot.track_rows.push_back(static_cast<int>(pair.tracks.size()));
      ot.positions.push_back(p_cam);
      pair.tracks.push_back(track);
    }
    for (auto& [id, ot] : truth_by_object) pair_truth.objects.push_back(std::move(ot));

    // Scene flow over the previous frame's emitted cloud: true displacement
    // between the two sensor frames for real points, garbage for mirrors.
    Rng flow_rng = Rng::derive(config.seed, kStreamFlowNoise, static_cast<std::uint64_t>(k));
    const PointCloudFrame& prev_cloud = data.frames[k - 1].cloud;
    const RigidTransform world_to_sensor_k = sensor_poses[k].inverse();
    for (int i = 0; i < static_cast<int>(prev_cloud.size()); ++i) {
      pair.flow.points.push_back(prev_cloud.points[i]);
      const bool is_mirror = data.truth.mirror_flags[k - 1][i] != 0;
      Eigen::Vector3d flow_true = Eigen::Vector3d::Zero();
      double moving = 1.0;
      if (!is_mirror) {
        const int real_idx = visible_rows[i];
        const RealPoint& rp = real[real_idx];
        flow_true = world_to_sensor_k.apply(rp.world_at(times[k])) -
                    data.truth.clean_points[k - 1][real_idx];
        moving = rp.velocity.norm() > 1e-9 ? 1.0 : 0.0;
      }
      const Eigen::Vector3d noise = flow_rng.normal3(config.flow.noise_sigma);
      const bool flip = flow_rng.bernoulli(config.flow.label_flip_prob);
      pair.flow.flow.push_back(flow_true + noise);
      pair.flow.moving_prob.push_back(flip ? 1.0 - moving : moving);
    }

    data.pairs.push_back(std::move(pair));
    data.truth.pairs.push_back(std::move(pair_truth));
  }

  // Absolute (frame-rate, noisy) and high-rate (drifting) pose streams.
  Rng vi_rng = Rng::derive(config.seed, kStreamViNoise);
  for (int k = 0; k < n_frames; ++k) {
    RigidTransform pose = sensor_poses[k];
    pose.translation += vi_rng.normal3(config.poses.vi_noise_sigma);
    data.vi_poses.samples.push_back({times[k], pose});
  }
  const double t_last = times.back();
  const Eigen::Vector3d drift_dir = config.poses.drift_rate > 0.0
                                        ? config.poses.drift_direction.normalized()
                                        : Eigen::Vector3d::Zero();
  const int n_inertial = static_cast<int>(std::floor(t_last * config.poses.inertial_rate)) + 1;
  for (int j = 0; j < n_inertial; ++j) {
    const double t = static_cast<double>(j) / config.poses.inertial_rate;
    RigidTransform pose = sensor_pose_at(config, t);
    pose.translation += config.poses.drift_rate * t * drift_dir;
    data.inertial_poses.samples.push_back({t, pose});
  }
  if (data.inertial_poses.samples.back().timestamp < t_last - 1e-9) {
    RigidTransform pose = sensor_pose_at(config, t_last);
    pose.translation += config.poses.drift_rate * t_last * drift_dir;
    data.inertial_poses.samples.push_back({t_last, pose});
  }

  return data;
}

}  // namespace radarvi::sim
