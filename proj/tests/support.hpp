#pragma once

// Shared fixtures and helpers for the unit and acceptance suites.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Geometry>

#include "radarvi/geometry.hpp"
#include "radarvi/io.hpp"
#include "radarvi/reconstruction.hpp"
#include "radarvi/rng.hpp"
#include "radarvi/sim.hpp"
#include "radarvi/types.hpp"

namespace testsupport {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    const unsigned id = counter.fetch_add(1);
    path_ = std::filesystem::temp_directory_path() /
            ("radarvi_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(id));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Eigen::Matrix3d random_rotation(radarvi::Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  while (q.norm() < 1e-6) q = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return q.normalized().toRotationMatrix();
}

inline radarvi::RigidTransform random_transform(radarvi::Rng& rng, double translation_scale) {
  return {random_rotation(rng), rng.normal3(translation_scale)};
}

// Rotation by a bounded angle about a random axis.
inline Eigen::Matrix3d small_rotation(radarvi::Rng& rng, double max_angle) {
  return Eigen::AngleAxisd(rng.uniform(0.0, max_angle), rng.unit_vector()).toRotationMatrix();
}

inline radarvi::CameraIntrinsics default_intrinsics() { return {460.0, 460.0, 320.0, 240.0}; }

inline double rotation_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return Eigen::AngleAxisd(Eigen::Matrix3d(a.transpose() * b)).angle();
}

// One rigid object observed over a frame pair: a noiseless reconstruction
// problem together with the states that generated it. Feature depths stay
// well clear of the cheirality guard in both frames by construction.
struct ObjectFixture {
  radarvi::ReconstructionProblem problem;
  std::vector<Eigen::Vector3d> positions;  // previous camera frame
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

inline ObjectFixture make_object_fixture(radarvi::Rng& rng, int n_tracks) {
  using namespace radarvi;
  ObjectFixture fx;
  fx.problem.intrinsics = default_intrinsics();
  fx.problem.camera_pose = {small_rotation(rng, 0.25),
                            {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                             rng.uniform(-0.3, 0.3)}};
  fx.translation = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};

  const RigidTransform& T = fx.problem.camera_pose;
  for (int i = 0; i < n_tracks; ++i) {
    const double z = rng.uniform(4.0, 10.0);
    const Eigen::Vector3d p(rng.uniform(-0.45, 0.45) * z, rng.uniform(-0.45, 0.45) * z, z);
    const Eigen::Vector3d q = p + fx.translation;
    FeatureTrack track;
    track.prev_pixel = project(fx.problem.intrinsics, p);
    track.curr_pixel = project(fx.problem.intrinsics, T.apply(q));
    track.object_id = 1;
    fx.positions.push_back(p);
    fx.problem.tracks.push_back(track);
  }
  return fx;
}

// Pose stream sampled from an analytic trajectory.
inline radarvi::PoseStream sample_stream(
    double t0, double t1, double rate,
    const std::function<radarvi::RigidTransform(double)>& pose_fn) {
  radarvi::PoseStream out;
  const int n = static_cast<int>((t1 - t0) * rate + 1e-9) + 1;
  for (int k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) / rate;
    out.samples.push_back({t, pose_fn(t)});
  }
  return out;
}

// Gentle arc with yaw: exercises both translation and rotation fusion.
inline radarvi::RigidTransform arc_pose(double t) {
  const double w = 0.05;
  radarvi::RigidTransform pose;
  pose.translation = {20.0 * std::cos(w * t) - 20.0, 20.0 * std::sin(w * t), 0.1 * t};
  pose.rotation = Eigen::AngleAxisd(w * t, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return pose;
}

// Small four-frame scene with one moving object, mirrors behind a distant
// reflector, and every pose stream populated. Fast enough for per-test use.
inline radarvi::sim::SceneConfig tiny_scene_config(std::uint64_t seed, bool with_rdm = false) {
  radarvi::sim::SceneConfig cfg;
  cfg.seed = seed;
  cfg.duration = 0.4;
  cfg.frame_rate = 10.0;
  cfg.trajectory.velocity = {0.3, 0.6, 0.0};
  cfg.trajectory.yaw_rate = 0.05;
  cfg.background.point_count = 120;
  cfg.background.feature_count = 12;
  radarvi::sim::ObjectConfig obj;
  obj.center = {0.0, 9.0, 0.2};
  // Slow enough that the camera baseline dominates the object's own motion;
  // faster movers defeat static-assumption triangulation (see pipeline tests).
  obj.velocity = {0.2, 0.05, 0.0};
  obj.point_count = 30;
  obj.feature_count = 6;
  cfg.objects.push_back(obj);
  cfg.reflectors.push_back({{1.0, 0.0, 0.0}, -20.0});
  cfg.radar.spurious_fraction = 0.08;
  cfg.radar.persistence = 0.2;
  if (with_rdm) {
    cfg.radar.rdm.enabled = true;
    cfg.radar.rdm.range_bins = 32;
    cfg.radar.rdm.doppler_bins = 32;
    cfg.radar.rdm.range_res = 1.0;
    cfg.radar.rdm.doppler_res = 0.25;
  }
  cfg.poses.vi_noise_sigma = 0.01;
  cfg.poses.inertial_rate = 100.0;
  cfg.poses.drift_rate = 0.05;
  return cfg;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

// Runs the CLI binary with the given arguments, capturing stdout and stderr
// together. Only available to targets compiled with RADARVI_CLI_PATH.
#ifdef RADARVI_CLI_PATH
inline CommandResult run_cli(const std::vector<std::string>& args,
                             const std::filesystem::path& scratch) {
  const std::filesystem::path capture = scratch / "cli_capture.txt";
  std::string cmd = shell_quote(RADARVI_CLI_PATH);
  for (const std::string& arg : args) cmd += " " + shell_quote(arg);
  cmd += " > " + shell_quote(capture.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (std::filesystem::exists(capture)) result.output = radarvi::io::read_text_file(capture);
  return result;
}
#endif

}  // namespace testsupport
