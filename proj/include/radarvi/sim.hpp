#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "radarvi/cfar.hpp"
#include "radarvi/types.hpp"

// Deterministic synthetic-world generator. Conventions:
//  - World and sensor frames are x-right, y-forward, z-up; radar
//    back-projection boresight is +y.
//  - The camera is co-located with the sensor but rotated by the fixed
//    extrinsic camera_from_sensor() (camera x-right, y-down, z-forward).
//  - Pose streams store sensor-to-world transforms at sample timestamps.
//  - All randomness derives from SceneConfig::seed through named
//    (seed, stream, index) substreams, making every output bit-reproducible.
namespace radarvi::sim {

// Rotation taking sensor coordinates to camera coordinates.
Eigen::Matrix3d camera_from_sensor();

struct Waypoint {
  double time = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;  // radians about world +z
};

struct TrajectoryConfig {
  enum class Type { kConstantVelocity, kWaypoints };
  Type type = Type::kConstantVelocity;
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double yaw = 0.0;       // initial heading, radians
  double yaw_rate = 0.0;  // radians per second
  std::vector<Waypoint> waypoints;  // used by Type::kWaypoints, sorted by time
};

struct ObjectConfig {
  enum class Shape { kBox, kSphere };
  Shape shape = Shape::kBox;
  Eigen::Vector3d extent = {1.0, 1.0, 1.0};  // box full extents
  double radius = 0.5;                        // sphere radius
  Eigen::Vector3d center = {0.0, 10.0, 0.0};  // world position at t = 0
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  int point_count = 40;    // surface samples (ground truth)
  int feature_count = 8;   // visual features, taken from the first samples
  // Fraction of the surface samples missing from the emitted radar cloud
  // (they stay in the ground truth and in the RDM, modeling a sparse point
  // extractor rather than missing physics). The last samples are dropped, so
  // visual features can cover radar-invisible geometry.
  double radar_dropout = 0.0;
};

struct BackgroundConfig {
  int point_count = 0;
  Eigen::Vector3d lo = {-15.0, 2.0, -1.0};
  Eigen::Vector3d hi = {15.0, 30.0, 3.0};
  int feature_count = 0;  // static visual features, taken from the first points
};

// Plane n . x = offset with |n| = 1, acting as a multipath mirror.
struct ReflectorPlane {
  Eigen::Vector3d normal = {1.0, 0.0, 0.0};
  double offset = 0.0;
};

struct RdmConfig {
  bool enabled = false;
  int range_bins = 128;
  int doppler_bins = 64;
  double range_res = 0.5;    // meters
  double doppler_res = 0.25; // m/s
  double noise_power = 1.0;  // exponential noise mean, linear power
  double target_snr_db = 30.0;
};

struct RadarConfig {
  double point_noise_sigma = 0.02;   // meters, per emitted point
  // Target fraction of each frame's points that are mirrors. Candidates are
  // drawn with probability spurious_fraction / persistence and each candidate
  // appears per frame with the persistence probability, so the expected
  // per-frame mirror count is point_count * spurious_fraction.
  double spurious_fraction = 0.0;
  double persistence = 0.2;          // per-frame probability a candidate appears
  double min_mirror_clearance = 2.0; // meters, source-to-reflector minimum distance
  RdmConfig rdm;
};

struct FlowConfig {
  double noise_sigma = 0.0;     // meters, Gaussian flow noise
  double label_flip_prob = 0.0; // Bernoulli moving-probability flips
};

struct PoseStreamConfig {
  double vi_noise_sigma = 0.0;   // meters, absolute-stream position noise
  double inertial_rate = 100.0;  // Hz
  double drift_rate = 0.0;       // m/s linear drift of the inertial stream
  Eigen::Vector3d drift_direction = {1.0, 0.0, 0.0};
};

struct SceneConfig {
  std::uint64_t seed = 0;
  double duration = 1.0;    // seconds; must cover at least two frames
  double frame_rate = 10.0; // Hz
  TrajectoryConfig trajectory;
  CameraIntrinsics intrinsics{460.0, 460.0, 320.0, 240.0};
  int image_width = 640;
  int image_height = 480;
  double pixel_noise_sigma = 0.0;
  BackgroundConfig background;
  std::vector<ObjectConfig> objects;
  std::vector<ReflectorPlane> reflectors;
  RadarConfig radar;
  FlowConfig flow;
  PoseStreamConfig poses;

  int frame_count() const;
  void validate() const;  // InvalidConfig

  static SceneConfig from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

struct ObservedFrame {
  int index = 0;
  double timestamp = 0.0;
  PointCloudFrame cloud;  // sensor frame, noisy, mirrors included
  std::optional<RangeDopplerMatrix> rdm;
};

// Visual and flow observations of the frame pair (index - 1, index).
struct FramePair {
  int index = 0;  // current frame k >= 1
  std::vector<FeatureTrack> tracks;
  ScenePointSet flow;  // over frame k-1's emitted cloud, in its sensor frame
};

// Ground truth of one rigid object (id 0 collects the static features) over
// one frame pair, in the previous camera frame.
struct ObjectTruth {
  int object_id = 0;
  Eigen::Vector3d delta_d = Eigen::Vector3d::Zero();
  std::vector<int> track_rows;              // rows into the pair's track list
  std::vector<Eigen::Vector3d> positions;   // per track row
};

struct PairTruth {
  int index = 0;
  RigidTransform camera_transform;  // previous camera frame -> current camera frame
  std::vector<ObjectTruth> objects;
};

struct SceneGroundTruth {
  PoseStream sensor_poses;  // exact sensor poses at frame timestamps
  // Per frame, parallel to the emitted cloud points:
  std::vector<std::vector<std::uint8_t>> mirror_flags;
  std::vector<std::vector<int>> mirror_source;     // source point index, -1 for real points
  std::vector<std::vector<int>> mirror_reflector;  // reflector index, -1 for real points
  // Per frame: noiseless real geometry in the sensor frame.
  std::vector<std::vector<Eigen::Vector3d>> clean_points;
  std::vector<std::vector<int>> clean_labels;
  std::vector<PairTruth> pairs;
};

struct SceneData {
  SceneConfig config;
  std::vector<ObservedFrame> frames;
  std::vector<FramePair> pairs;
  PoseStream vi_poses;        // frame-rate absolute stream with configured noise
  PoseStream inertial_poses;  // high-rate stream with configured linear drift
  SceneGroundTruth truth;
};

// Exact sensor pose of the configured trajectory at time t.
RigidTransform sensor_pose_at(const SceneConfig& config, double t);

SceneData generate_scene(const SceneConfig& config);

// Writes the scene under dir as
//   clouds/  tracks/  poses/  rdm/  truth/  manifest.json
// and returns the manifest (which embeds per-file SHA-256 hashes).
nlohmann::ordered_json export_scene(const SceneData& data, const std::filesystem::path& dir);

// Reads back everything export_scene wrote. Throws MissingInput / IoFailure.
SceneData load_scene(const std::filesystem::path& dir);

}  // namespace radarvi::sim
