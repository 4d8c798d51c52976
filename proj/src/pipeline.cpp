#include "radarvi/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Geometry>

#include "radarvi/cfar.hpp"
#include "radarvi/errors.hpp"
#include "radarvi/io.hpp"
#include "radarvi/metrics.hpp"
#include "radarvi/spurious.hpp"

namespace radarvi::pipeline {
namespace {

using io::json;
namespace fs = std::filesystem;

std::string numbered(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d.%s", stem, index, ext);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void say(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  throw InvalidConfig("config field '" + path + "': " + what);
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad_field(path, "expected an object");
  return j;
}

void check_known(const json& j, const std::string& prefix, std::set<std::string> keys) {
  for (const auto& [key, value] : j.items())
    if (!keys.contains(key)) bad_field(prefix + key, "unknown key");
}

double get_num(const json& j, const char* key, double def, const std::string& prefix) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number()) bad_field(prefix + key, "expected a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int def, const std::string& prefix) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number_integer()) bad_field(prefix + key, "expected an integer");
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const char* key, bool def, const std::string& prefix) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) bad_field(prefix + key, "expected a boolean");
  return j.at(key).get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& def,
                    const std::string& prefix) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string()) bad_field(prefix + key, "expected a string");
  return j.at(key).get<std::string>();
}

fs::path resolve_dir(const std::string& value, const fs::path& base_dir) {
  fs::path p(value);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.lexically_normal();
}

SolverOptions solver_from_json(const json& j) {
  const json& s = expect_object(j, "solver");
  check_known(s, "solver.",
              {"initial_lambda", "lambda_up", "lambda_down", "max_iterations",
               "gradient_tolerance", "cost_tolerance", "scene_depth_prior",
               "reprojection_scale", "max_restarts", "restart_cost_threshold", "restart_step",
               "degenerate_singular_ratio"});
  SolverOptions o;
  o.initial_lambda = get_num(s, "initial_lambda", o.initial_lambda, "solver.");
  o.lambda_up = get_num(s, "lambda_up", o.lambda_up, "solver.");
  o.lambda_down = get_num(s, "lambda_down", o.lambda_down, "solver.");
  o.max_iterations = get_int(s, "max_iterations", o.max_iterations, "solver.");
  o.gradient_tolerance = get_num(s, "gradient_tolerance", o.gradient_tolerance, "solver.");
  o.cost_tolerance = get_num(s, "cost_tolerance", o.cost_tolerance, "solver.");
  o.scene_depth_prior = get_num(s, "scene_depth_prior", o.scene_depth_prior, "solver.");
  o.reprojection_scale = get_num(s, "reprojection_scale", o.reprojection_scale, "solver.");
  o.max_restarts = get_int(s, "max_restarts", o.max_restarts, "solver.");
  o.restart_cost_threshold =
      get_num(s, "restart_cost_threshold", o.restart_cost_threshold, "solver.");
  o.restart_step = get_num(s, "restart_step", o.restart_step, "solver.");
  o.degenerate_singular_ratio =
      get_num(s, "degenerate_singular_ratio", o.degenerate_singular_ratio, "solver.");
  return o;
}

json solver_to_json(const SolverOptions& o) {
  return {{"initial_lambda", o.initial_lambda},
          {"lambda_up", o.lambda_up},
          {"lambda_down", o.lambda_down},
          {"max_iterations", o.max_iterations},
          {"gradient_tolerance", o.gradient_tolerance},
          {"cost_tolerance", o.cost_tolerance},
          {"scene_depth_prior", o.scene_depth_prior},
          {"reprojection_scale", o.reprojection_scale},
          {"max_restarts", o.max_restarts},
          {"restart_cost_threshold", o.restart_cost_threshold},
          {"restart_step", o.restart_step},
          {"degenerate_singular_ratio", o.degenerate_singular_ratio}};
}

EkfOptions ekf_from_json(const json& j) {
  const json& s = expect_object(j, "ekf");
  check_known(s, "ekf.",
              {"sigma_process_pos", "sigma_process_rot", "sigma_process_vel", "sigma_meas_pos",
               "sigma_meas_rot", "init_sigma_pos", "init_sigma_rot", "init_sigma_vel"});
  EkfOptions o;
  o.sigma_process_pos = get_num(s, "sigma_process_pos", o.sigma_process_pos, "ekf.");
  o.sigma_process_rot = get_num(s, "sigma_process_rot", o.sigma_process_rot, "ekf.");
  o.sigma_process_vel = get_num(s, "sigma_process_vel", o.sigma_process_vel, "ekf.");
  o.sigma_meas_pos = get_num(s, "sigma_meas_pos", o.sigma_meas_pos, "ekf.");
  o.sigma_meas_rot = get_num(s, "sigma_meas_rot", o.sigma_meas_rot, "ekf.");
  o.init_sigma_pos = get_num(s, "init_sigma_pos", o.init_sigma_pos, "ekf.");
  o.init_sigma_rot = get_num(s, "init_sigma_rot", o.init_sigma_rot, "ekf.");
  o.init_sigma_vel = get_num(s, "init_sigma_vel", o.init_sigma_vel, "ekf.");
  return o;
}

json ekf_to_json(const EkfOptions& o) {
  return {{"sigma_process_pos", o.sigma_process_pos},
          {"sigma_process_rot", o.sigma_process_rot},
          {"sigma_process_vel", o.sigma_process_vel},
          {"sigma_meas_pos", o.sigma_meas_pos},
          {"sigma_meas_rot", o.sigma_meas_rot},
          {"init_sigma_pos", o.init_sigma_pos},
          {"init_sigma_rot", o.init_sigma_rot},
          {"init_sigma_vel", o.init_sigma_vel}};
}

const char* status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max_iterations";
    case SolveStatus::kDegenerate: return "degenerate";
    case SolveStatus::kFailed: return "failed";
  }
  return "failed";
}

json metrics_json(const MetricReport& report) {
  return {{"rpcdl", report.rpcdl},
          {"clutter_count", report.clutter_count},
          {"chamfer", report.chamfer},
          {"modified_hausdorff", report.modified_hausdorff}};
}

}  // namespace

// ---------------------------------------------------------------------------

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const unsigned hw = std::thread::hardware_concurrency();
  int workers = threads > 0 ? threads : (hw > 0 ? static_cast<int>(hw) : 1);
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(body);
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  if (scene_dir.empty()) throw InvalidConfig("run config: scene_dir must be set");
  if (filter_frames < 2) throw InvalidConfig("run config: filter frames must be at least 2");
  if (!(filter_d0 > 0.0)) throw InvalidConfig("run config: filter d0 must be positive");
  if (!(filter_percentile > 0.0) || filter_percentile > 100.0)
    throw InvalidConfig("run config: filter percentile must lie in (0, 100]");
  if (!(metric_delta > 0.0)) throw InvalidConfig("run config: metric delta must be positive");
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  expect_object(j, "<root>");
  check_known(j, "",
              {"scene_dir", "dynamic_reconstruction", "spurious_filter", "pose_source",
               "delta_source", "solver", "ekf", "filter", "metrics"});
  RunConfig c;
  if (!j.contains("scene_dir")) bad_field("scene_dir", "required");
  c.scene_dir = resolve_dir(get_str(j, "scene_dir", "", ""), base_dir);
  c.dynamic_reconstruction =
      get_bool(j, "dynamic_reconstruction", c.dynamic_reconstruction, "");
  c.spurious_filter = get_bool(j, "spurious_filter", c.spurious_filter, "");

  const std::string pose = get_str(j, "pose_source", "ekf", "");
  if (pose == "ekf")
    c.pose_source = PoseSource::kEkf;
  else if (pose == "vi")
    c.pose_source = PoseSource::kVi;
  else if (pose == "truth")
    c.pose_source = PoseSource::kTruth;
  else
    bad_field("pose_source", "must be 'ekf', 'vi' or 'truth'");

  const std::string delta = get_str(j, "delta_source", "reconstruction", "");
  if (delta == "reconstruction")
    c.delta_source = DeltaSource::kReconstruction;
  else if (delta == "truth")
    c.delta_source = DeltaSource::kTruth;
  else
    bad_field("delta_source", "must be 'reconstruction' or 'truth'");

  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  if (j.contains("ekf")) c.ekf = ekf_from_json(j.at("ekf"));
  if (j.contains("filter")) {
    const json& f = expect_object(j.at("filter"), "filter");
    check_known(f, "filter.", {"frames", "d0", "percentile", "adaptive"});
    c.filter_frames = get_int(f, "frames", c.filter_frames, "filter.");
    c.filter_d0 = get_num(f, "d0", c.filter_d0, "filter.");
    c.filter_percentile = get_num(f, "percentile", c.filter_percentile, "filter.");
    c.filter_adaptive = get_bool(f, "adaptive", c.filter_adaptive, "filter.");
  }
  if (j.contains("metrics")) {
    const json& m = expect_object(j.at("metrics"), "metrics");
    check_known(m, "metrics.", {"delta"});
    c.metric_delta = get_num(m, "delta", c.metric_delta, "metrics.");
  }
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  return {{"scene_dir", scene_dir.string()},
          {"dynamic_reconstruction", dynamic_reconstruction},
          {"spurious_filter", spurious_filter},
          {"pose_source", pose_source == PoseSource::kEkf
                              ? "ekf"
                              : (pose_source == PoseSource::kVi ? "vi" : "truth")},
          {"delta_source",
           delta_source == DeltaSource::kReconstruction ? "reconstruction" : "truth"},
          {"solver", solver_to_json(solver)},
          {"ekf", ekf_to_json(ekf)},
          {"filter",
           {{"frames", filter_frames},
            {"d0", filter_d0},
            {"percentile", filter_percentile},
            {"adaptive", filter_adaptive}}},
          {"metrics", {{"delta", metric_delta}}}};
}

// ---------------------------------------------------------------------------
// CfarRunConfig

void CfarRunConfig::validate() const {
  if (scene_dir.empty()) throw InvalidConfig("cfar config: scene_dir must be set");
  if (!(pfa > 0.0) || pfa >= 1.0) throw InvalidConfig("cfar config: pfa must lie in (0, 1)");
  if (guard < 0) throw InvalidConfig("cfar config: guard must be non-negative");
  if (train < 1) throw InvalidConfig("cfar config: train must be at least 1");
  if (!(db_step > 0.0)) throw InvalidConfig("cfar config: db_step must be positive");
  if (db_min > db_max) throw InvalidConfig("cfar config: db_min must not exceed db_max");
  if (os_rank < 0) throw InvalidConfig("cfar config: os_rank must be non-negative");
  if (!(metric_delta > 0.0)) throw InvalidConfig("cfar config: metric delta must be positive");
}

CfarRunConfig CfarRunConfig::from_json(const json& j, const fs::path& base_dir) {
  expect_object(j, "<root>");
  check_known(j, "",
              {"scene_dir", "detector", "mode", "pfa", "db_min", "db_max", "db_step", "guard",
               "train", "os_rank", "metrics"});
  CfarRunConfig c;
  if (!j.contains("scene_dir")) bad_field("scene_dir", "required");
  c.scene_dir = resolve_dir(get_str(j, "scene_dir", "", ""), base_dir);

  const std::string detector = get_str(j, "detector", "ca", "");
  if (detector == "ca")
    c.detector = Detector::kCa;
  else if (detector == "os")
    c.detector = Detector::kOs;
  else
    bad_field("detector", "must be 'ca' or 'os'");

  const std::string mode = get_str(j, "mode", "pfa", "");
  if (mode == "pfa")
    c.mode = Mode::kPfa;
  else if (mode == "db_sweep")
    c.mode = Mode::kDbSweep;
  else
    bad_field("mode", "must be 'pfa' or 'db_sweep'");

  c.pfa = get_num(j, "pfa", c.pfa, "");
  c.db_min = get_num(j, "db_min", c.db_min, "");
  c.db_max = get_num(j, "db_max", c.db_max, "");
  c.db_step = get_num(j, "db_step", c.db_step, "");
  c.guard = get_int(j, "guard", c.guard, "");
  c.train = get_int(j, "train", c.train, "");
  c.os_rank = get_int(j, "os_rank", c.os_rank, "");
  if (j.contains("metrics")) {
    const json& m = expect_object(j.at("metrics"), "metrics");
    check_known(m, "metrics.", {"delta"});
    c.metric_delta = get_num(m, "delta", c.metric_delta, "metrics.");
  }
  c.validate();
  return c;
}

json CfarRunConfig::to_json() const {
  return {{"scene_dir", scene_dir.string()},
          {"detector", detector == Detector::kCa ? "ca" : "os"},
          {"mode", mode == Mode::kPfa ? "pfa" : "db_sweep"},
          {"pfa", pfa},
          {"db_min", db_min},
          {"db_max", db_max},
          {"db_step", db_step},
          {"guard", guard},
          {"train", train},
          {"os_rank", os_rank},
          {"metrics", {{"delta", metric_delta}}}};
}

// ---------------------------------------------------------------------------
// simulate

json cmd_simulate(const fs::path& config_path, const fs::path& out_dir, const LogFn& log) {
  const sim::SceneConfig config = sim::SceneConfig::from_json(io::load_json_file(config_path));
  const sim::SceneData data = sim::generate_scene(config);
  const json manifest = sim::export_scene(data, out_dir);
  std::size_t mirrors = 0;
  for (const auto& flags : data.truth.mirror_flags)
    for (std::uint8_t f : flags) mirrors += f;
  say(log, "scene: " + std::to_string(data.frames.size()) + " frames, " +
               std::to_string(data.frames.empty() ? 0 : data.frames.front().cloud.size()) +
               " points in frame 0, " + std::to_string(mirrors) + " mirror points total");
  say(log, "wrote " + std::to_string(manifest.at("files").size()) + " files to " +
               out_dir.string());
  return manifest;
}

// ---------------------------------------------------------------------------
// run

namespace {

struct RecoveredObject {
  int object_id = 0;
  std::vector<Eigen::Vector3d> positions;  // previous camera frame
  Eigen::Vector3d delta = Eigen::Vector3d::Zero();
  bool converged = false;
  int iterations = 0;
  double final_cost = 0.0;
  std::string status;
};

struct PairStage {
  RigidTransform step;         // previous sensor frame -> current sensor frame
  RigidTransform camera_step;  // previous camera frame -> current camera frame
  bool step_from_flow = false;
  double consistency = std::numeric_limits<double>::quiet_NaN();
  std::vector<RecoveredObject> objects;
  std::vector<std::string> warnings;
};

struct FrameStage {
  PointCloudFrame enhanced;
  int baseline_points = 0;
  int flagged = 0;
  int added = 0;
  bool metrics_ok = false;
  MetricReport report;
  std::vector<std::string> warnings;
};

void fallback_triangulate(RecoveredObject& ro, const std::vector<FeatureTrack>& tracks,
                          const CameraIntrinsics& intrinsics, const RigidTransform& camera_step,
                          std::vector<std::string>& warnings, int pair_index) {
  ro.positions.clear();
  ro.delta.setZero();
  int skipped = 0;
  for (const FeatureTrack& track : tracks) {
    try {
      ro.positions.push_back(triangulate_midpoint(track, intrinsics, camera_step));
    } catch (const Error&) {
      ++skipped;
    }
  }
  if (skipped > 0)
    warnings.push_back("pair " + std::to_string(pair_index) + " object " +
                       std::to_string(ro.object_id) + ": " + std::to_string(skipped) +
                       " tracks untriangulable in fallback");
}

}  // namespace

json cmd_run(const RunConfig& config, const fs::path& out_dir, int threads, const LogFn& log) {
  config.validate();
  if (!fs::exists(config.scene_dir / "manifest.json"))
    throw MissingInput("scene directory has no manifest.json: " + config.scene_dir.string());
  const sim::SceneData scene = sim::load_scene(config.scene_dir);
  const int n_frames = static_cast<int>(scene.frames.size());
  if (n_frames == 0) throw MissingInput("scene has no frames: " + config.scene_dir.string());
  say(log, "loaded scene: " + std::to_string(n_frames) + " frames, " +
               std::to_string(scene.pairs.size()) + " pairs");

  // Pose stream powering camera transforms and the filter fallback.
  PoseStream used;
  EkfDiagnostics ekf_diag;
  switch (config.pose_source) {
    case PoseSource::kEkf:
      used = fuse_pose_streams(scene.vi_poses, scene.inertial_poses, config.ekf, &ekf_diag);
      break;
    case PoseSource::kVi:
      used = scene.vi_poses;
      break;
    case PoseSource::kTruth:
      used = scene.truth.sensor_poses;
      break;
  }

  const Eigen::Matrix3d r_cs = sim::camera_from_sensor();
  const Eigen::Matrix3d r_sc = r_cs.transpose();
  const RigidTransform cam_to_sensor{r_sc, Eigen::Vector3d::Zero()};
  const RigidTransform sensor_to_cam{r_cs, Eigen::Vector3d::Zero()};

  // Pass A: per-pair inter-frame transforms (flow Kabsch with pose-stream
  // fallback) and dynamic-feature reconstruction.
  std::vector<PairStage> pairs(n_frames);
  parallel_for(n_frames, threads, [&](int k) {
    if (k == 0) return;
    PairStage& st = pairs[k];
    const sim::FramePair& pair = scene.pairs[k - 1];
    const double t_prev = scene.frames[k - 1].timestamp;
    const double t_curr = scene.frames[k].timestamp;
    const RigidTransform reference = relative_transform(used, t_curr, t_prev);

    try {
      const std::vector<PointPair> static_pairs = select_static(pair.flow);
      st.step = kabsch(static_pairs);
      st.step_from_flow = true;
      std::vector<Eigen::Vector3d> sources;
      sources.reserve(static_pairs.size());
      for (const PointPair& pp : static_pairs) sources.push_back(pp.first);
      st.consistency = transform_consistency_loss(st.step, reference, sources);
    } catch (const Error& e) {
      st.step = reference;
      st.warnings.push_back("pair " + std::to_string(k) + ": flow transform unavailable (" +
                            std::string(e.what()) + "); using pose stream");
    }
    st.camera_step = sensor_to_cam * reference * cam_to_sensor;

    if (!config.dynamic_reconstruction) return;
    std::map<int, std::vector<FeatureTrack>> by_object;
    for (const FeatureTrack& track : pair.tracks)
      if (track.object_id >= 1) by_object[track.object_id].push_back(track);
    for (const auto& [object_id, tracks] : by_object) {
      RecoveredObject ro;
      ro.object_id = object_id;
      try {
        ReconstructionProblem problem{tracks, scene.config.intrinsics, st.camera_step};
        const ReconstructionSolution sol = solve_reconstruction(problem, config.solver);
        ro.status = status_name(sol.status);
        ro.iterations = sol.iterations;
        ro.final_cost = sol.final_cost;
        if (sol.converged) {
          ro.positions = sol.positions;
          ro.delta = sol.translation;
          ro.converged = true;
        } else {
          st.warnings.push_back("pair " + std::to_string(k) + " object " +
                                std::to_string(object_id) + ": solver " + ro.status +
                                "; falling back to static triangulation");
          fallback_triangulate(ro, tracks, scene.config.intrinsics, st.camera_step,
                               st.warnings, k);
        }
      } catch (const Error& e) {
        ro.status = "error";
        st.warnings.push_back("pair " + std::to_string(k) + " object " +
                              std::to_string(object_id) + ": " + std::string(e.what()) +
                              "; falling back to static triangulation");
        fallback_triangulate(ro, tracks, scene.config.intrinsics, st.camera_step, st.warnings,
                             k);
      }
      st.objects.push_back(std::move(ro));
    }
  });

  // Pass B: per-frame filtering, cloud assembly and metrics.
  std::vector<FrameStage> frames(n_frames);
  parallel_for(n_frames, threads, [&](int k) {
    FrameStage& fst = frames[k];
    const PointCloudFrame& base = scene.frames[k].cloud;
    fst.baseline_points = static_cast<int>(base.size());
    std::vector<std::uint8_t> drop(base.size(), 0);

    if (config.spurious_filter && k >= 1) {
      const int window = std::min(config.filter_frames, k + 1);
      StabilityContext ctx;
      ctx.d0 = config.filter_d0;
      ctx.percentile = config.filter_percentile;
      ctx.adaptive = config.filter_adaptive;
      ctx.frames.push_back(base);
      RigidTransform chain = RigidTransform::identity();
      for (int i = 1; i < window; ++i) {
        chain = chain * pairs[k - i + 1].step;
        ctx.frames.push_back(scene.frames[k - i].cloud);
        ctx.transforms.push_back(chain);
        ctx.delta_ts.push_back(scene.frames[k - i + 1].timestamp -
                               scene.frames[k - i].timestamp);
      }
      if (config.delta_source == DeltaSource::kTruth) {
        for (const sim::ObjectTruth& ot : scene.truth.pairs[k - 1].objects)
          if (ot.object_id >= 1)
            ctx.object_translations[ot.object_id] =
                pairs[k].step.rotation * (r_sc * ot.delta_d);
      } else {
        for (const RecoveredObject& ro : pairs[k].objects)
          if (ro.converged)
            ctx.object_translations[ro.object_id] =
                pairs[k].step.rotation * (r_sc * ro.delta);
      }
      try {
        const PointCloudFrame marked = mark_spurious(ctx);
        drop = marked.spurious;
        for (std::uint8_t d : drop) fst.flagged += d;
      } catch (const Error& e) {
        fst.warnings.push_back("frame " + std::to_string(k) + ": filter skipped (" +
                               std::string(e.what()) + ")");
      }
    }

    fst.enhanced.timestamp = base.timestamp;
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (drop[i]) continue;
      fst.enhanced.points.push_back(base.points[i]);
      fst.enhanced.labels.push_back(base.labels[i]);
      fst.enhanced.spurious.push_back(0);
    }
    if (config.dynamic_reconstruction && k >= 1) {
      for (const RecoveredObject& ro : pairs[k].objects) {
        for (const Eigen::Vector3d& p : ro.positions) {
          const Eigen::Vector3d q = pairs[k].camera_step.apply(p + ro.delta);
          fst.enhanced.points.push_back(r_sc * q);
          fst.enhanced.labels.push_back(ro.object_id);
          fst.enhanced.spurious.push_back(0);
          ++fst.added;
        }
      }
    }

    try {
      fst.report = evaluate_cloud(fst.enhanced.points, scene.truth.clean_points[k],
                                  config.metric_delta);
      fst.metrics_ok =
          std::isfinite(fst.report.chamfer) && std::isfinite(fst.report.modified_hausdorff);
      if (!fst.metrics_ok)
        fst.warnings.push_back("frame " + std::to_string(k) + ": empty enhanced cloud");
    } catch (const Error& e) {
      fst.warnings.push_back("frame " + std::to_string(k) + ": metrics unavailable (" +
                             std::string(e.what()) + ")");
    }
  });

  // Pass C: sequential, ordered writes.
  fs::create_directories(out_dir);
  io::write_text_file(out_dir / "run_config.json", config.to_json().dump(2) + "\n");
  io::write_pose_csv(out_dir / "poses" / "used.csv", used);

  int evaluated = 0, total_flagged = 0, total_added = 0, total_clutter = 0, warning_count = 0;
  double sum_chamfer = 0.0, sum_mhd = 0.0, sum_rpcdl = 0.0, sum_consistency = 0.0;
  int consistency_count = 0;
  json series = json::array();
  for (int k = 0; k < n_frames; ++k) {
    const FrameStage& fst = frames[k];
    io::write_cloud_csv(out_dir / "clouds" / numbered("enhanced", k, "csv"), fst.enhanced);

    json frame_json = {{"frame", k},
                       {"timestamp", scene.frames[k].timestamp},
                       {"points_baseline", fst.baseline_points},
                       {"points_enhanced", static_cast<int>(fst.enhanced.size())},
                       {"flagged", fst.flagged},
                       {"added", fst.added}};
    if (k >= 1 && std::isfinite(pairs[k].consistency)) {
      frame_json["transform_consistency"] = pairs[k].consistency;
      sum_consistency += pairs[k].consistency;
      ++consistency_count;
    } else {
      frame_json["transform_consistency"] = nullptr;
    }
    if (fst.metrics_ok) {
      frame_json["metrics"] = metrics_json(fst.report);
      sum_chamfer += fst.report.chamfer;
      sum_mhd += fst.report.modified_hausdorff;
      sum_rpcdl += fst.report.rpcdl;
      total_clutter += fst.report.clutter_count;
      ++evaluated;
      series.push_back({{"label", "frame_" + std::to_string(k)},
                        {"clutter_count", fst.report.clutter_count},
                        {"rpcdl", fst.report.rpcdl},
                        {"chamfer", fst.report.chamfer},
                        {"modified_hausdorff", fst.report.modified_hausdorff}});
    } else {
      frame_json["metrics"] = nullptr;
    }
    json warnings = json::array();
    if (k >= 1)
      for (const std::string& w : pairs[k].warnings) warnings.push_back(w);
    for (const std::string& w : fst.warnings) warnings.push_back(w);
    warning_count += static_cast<int>(warnings.size());
    frame_json["warnings"] = warnings;
    io::write_text_file(out_dir / "metrics" / numbered("frame", k, "json"),
                        frame_json.dump(2) + "\n");
    total_flagged += fst.flagged;
    total_added += fst.added;
    for (const std::string& w : fst.warnings) say(log, w);
    if (k >= 1)
      for (const std::string& w : pairs[k].warnings) say(log, w);
  }

  json aggregate = {{"format", "radarvi-run"},
                    {"scene_dir", config.scene_dir.string()},
                    {"dynamic_reconstruction", config.dynamic_reconstruction},
                    {"spurious_filter", config.spurious_filter},
                    {"pose_source", config.to_json().at("pose_source")},
                    {"frames", n_frames},
                    {"frames_evaluated", evaluated},
                    {"mean_rpcdl", evaluated > 0 ? json(sum_rpcdl / evaluated) : json()},
                    {"total_clutter", total_clutter},
                    {"mean_chamfer", evaluated > 0 ? json(sum_chamfer / evaluated) : json()},
                    {"mean_modified_hausdorff",
                     evaluated > 0 ? json(sum_mhd / evaluated) : json()},
                    {"total_flagged", total_flagged},
                    {"total_added", total_added},
                    {"mean_transform_consistency",
                     consistency_count > 0 ? json(sum_consistency / consistency_count) : json()},
                    {"warning_count", warning_count},
                    {"series", series}};
  if (config.pose_source == PoseSource::kEkf && !ekf_diag.trace_after.empty()) {
    aggregate["ekf"] = {{"updates", static_cast<int>(ekf_diag.trace_after.size())},
                        {"trace_before_first", ekf_diag.trace_before.front()},
                        {"trace_after_first", ekf_diag.trace_after.front()},
                        {"trace_after_last", ekf_diag.trace_after.back()}};
  }
  io::write_text_file(out_dir / "metrics" / "aggregate.json", aggregate.dump(2) + "\n");

  const json manifest = {{"format", "radarvi-run"},
                         {"version", 1},
                         {"files", io::directory_manifest(out_dir)}};
  io::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  say(log, "frames evaluated: " + std::to_string(evaluated) + "/" + std::to_string(n_frames));
  if (evaluated > 0) {
    say(log, "mean chamfer: " + fmt(sum_chamfer / evaluated) +
                 " m, mean modified Hausdorff: " + fmt(sum_mhd / evaluated) + " m");
    say(log, "flagged " + std::to_string(total_flagged) + " points, added " +
                 std::to_string(total_added));
  }
  return aggregate;
}

// ---------------------------------------------------------------------------
// cfar

json cmd_cfar(const CfarRunConfig& config, const fs::path& out_dir, int threads,
              const LogFn& log) {
  config.validate();
  const fs::path rdm_manifest_path = config.scene_dir / "rdm" / "manifest.json";
  if (!fs::exists(rdm_manifest_path))
    throw MissingInput("no range-Doppler data: " + rdm_manifest_path.string());
  const json rdm_index = io::load_json_file(rdm_manifest_path);
  if (!rdm_index.contains("frames") || rdm_index.at("frames").empty())
    throw MissingInput("range-Doppler manifest lists no frames: " + rdm_manifest_path.string());

  struct CfFrame {
    int frame = 0;
    double timestamp = 0.0;
    RangeDopplerMatrix rdm;
    std::vector<Eigen::Vector3d> truth;
  };
  std::vector<CfFrame> cf;
  for (const json& entry : rdm_index.at("frames")) {
    CfFrame f;
    f.frame = entry.at("frame").get<int>();
    f.timestamp = entry.at("timestamp").get<double>();
    f.rdm = io::read_rdm_binary(config.scene_dir / "rdm" / entry.at("file").get<std::string>(),
                                entry);
    const fs::path clean = config.scene_dir / "truth" / numbered("clean", f.frame, "csv");
    if (fs::exists(clean)) f.truth = io::read_cloud_csv(clean).points;
    cf.push_back(std::move(f));
  }
  const int n_frames = static_cast<int>(cf.size());
  say(log, "loaded " + std::to_string(n_frames) + " range-Doppler frames");

  const int w = config.guard + config.train;
  const int n_train_cells =
      (2 * w + 1) * (2 * w + 1) - (2 * config.guard + 1) * (2 * config.guard + 1);
  const int os_rank = config.os_rank > 0 ? config.os_rank : (3 * n_train_cells) / 4;

  struct Setting {
    std::string label;
    bool db_mode = false;
    double pfa = 0.0;
    double db = 0.0;
  };
  std::vector<Setting> settings;
  if (config.mode == CfarRunConfig::Mode::kPfa) {
    settings.push_back({"pfa", false, config.pfa, 0.0});
  } else {
    for (double db = config.db_min; db <= config.db_max + 1e-9; db += config.db_step)
      settings.push_back({"db_" + io::format_double(db), true, 0.0, db});
  }

  fs::create_directories(out_dir);
  io::write_text_file(out_dir / "cfar_config.json", config.to_json().dump(2) + "\n");

  struct FrameOut {
    int detections = 0;
    long cells = 0;
    PointCloudFrame cloud;
    bool metrics_ok = false;
    MetricReport report;
  };

  json settings_json = json::array();
  json series = json::array();
  std::string sweep_csv = "offset_db,total_points,alarm_rate,mean_rpcdl,mean_chamfer,"
                          "mean_modified_hausdorff\n";
  for (const Setting& setting : settings) {
    std::vector<FrameOut> outs(n_frames);
    parallel_for(n_frames, threads, [&](int i) {
      FrameOut& fo = outs[i];
      const RangeDopplerMatrix& rdm = cf[i].rdm;
      std::vector<Detection> dets;
      if (config.detector == CfarRunConfig::Detector::kCa)
        dets = setting.db_mode
                   ? ca_cfar_db(rdm, config.guard, config.train, setting.db)
                   : ca_cfar(rdm, config.guard, config.train, setting.pfa);
      else
        dets = setting.db_mode
                   ? os_cfar_db(rdm, config.guard, config.train, os_rank, setting.db)
                   : os_cfar(rdm, config.guard, config.train, os_rank, setting.pfa);
      fo.detections = static_cast<int>(dets.size());
      fo.cells = static_cast<long>(rdm.range_bins - 2 * w) *
                 static_cast<long>(rdm.doppler_bins - 2 * w);
      fo.cloud.timestamp = cf[i].timestamp;
      fo.cloud.points = detections_to_points(dets, rdm);  // throws MissingAngleMap
      fo.cloud.labels.assign(fo.cloud.points.size(), kLabelUnknown);
      fo.cloud.spurious.assign(fo.cloud.points.size(), 0);
      if (!cf[i].truth.empty() && !fo.cloud.points.empty()) {
        fo.report = evaluate_cloud(fo.cloud.points, cf[i].truth, config.metric_delta);
        fo.metrics_ok = std::isfinite(fo.report.chamfer);
      }
    });

    long total_dets = 0, total_cells = 0;
    int evaluated = 0, total_clutter = 0;
    double sum_chamfer = 0.0, sum_mhd = 0.0, sum_rpcdl = 0.0;
    json frame_rows = json::array();
    for (int i = 0; i < n_frames; ++i) {
      const FrameOut& fo = outs[i];
      io::write_cloud_csv(out_dir / "clouds" / setting.label /
                              numbered("cloud", cf[i].frame, "csv"),
                          fo.cloud);
      total_dets += fo.detections;
      total_cells += fo.cells;
      json row = {{"frame", cf[i].frame},
                  {"detections", fo.detections},
                  {"cells", fo.cells}};
      if (fo.metrics_ok) {
        row["metrics"] = metrics_json(fo.report);
        sum_chamfer += fo.report.chamfer;
        sum_mhd += fo.report.modified_hausdorff;
        sum_rpcdl += fo.report.rpcdl;
        total_clutter += fo.report.clutter_count;
        ++evaluated;
      } else {
        row["metrics"] = nullptr;
      }
      frame_rows.push_back(row);
    }
    const double alarm_rate =
        total_cells > 0 ? static_cast<double>(total_dets) / static_cast<double>(total_cells)
                        : 0.0;
    json setting_json = {{"label", setting.label},
                         {"mode", setting.db_mode ? "db_offset" : "pfa"},
                         {"total_detections", total_dets},
                         {"cells_evaluated", total_cells},
                         {"alarm_rate", alarm_rate},
                         {"frames_evaluated", evaluated},
                         {"mean_rpcdl", evaluated > 0 ? json(sum_rpcdl / evaluated) : json()},
                         {"total_clutter", total_clutter},
                         {"mean_chamfer",
                          evaluated > 0 ? json(sum_chamfer / evaluated) : json()},
                         {"mean_modified_hausdorff",
                          evaluated > 0 ? json(sum_mhd / evaluated) : json()},
                         {"frames", frame_rows}};
    if (setting.db_mode)
      setting_json["offset_db"] = setting.db;
    else
      setting_json["pfa"] = setting.pfa;
    settings_json.push_back(setting_json);
    series.push_back({{"label", setting.label},
                      {"clutter_count", total_clutter},
                      {"rpcdl", evaluated > 0 ? json(sum_rpcdl / evaluated) : json()},
                      {"chamfer", evaluated > 0 ? json(sum_chamfer / evaluated) : json()},
                      {"modified_hausdorff", evaluated > 0 ? json(sum_mhd / evaluated) : json()},
                      {"total_points", total_dets}});
    if (setting.db_mode)
      sweep_csv += io::format_double(setting.db) + "," + std::to_string(total_dets) + "," +
                   io::format_double(alarm_rate) + "," +
                   (evaluated > 0 ? io::format_double(sum_rpcdl / evaluated) : "") + "," +
                   (evaluated > 0 ? io::format_double(sum_chamfer / evaluated) : "") + "," +
                   (evaluated > 0 ? io::format_double(sum_mhd / evaluated) : "") + "\n";
    say(log, setting.label + ": " + std::to_string(total_dets) + " detections, alarm rate " +
                 fmt(alarm_rate));
  }
  if (config.mode == CfarRunConfig::Mode::kDbSweep)
    io::write_text_file(out_dir / "sweep.csv", sweep_csv);

  json aggregate = {{"format", "radarvi-cfar"},
                    {"scene_dir", config.scene_dir.string()},
                    {"detector", config.detector == CfarRunConfig::Detector::kCa ? "ca" : "os"},
                    {"mode", config.mode == CfarRunConfig::Mode::kPfa ? "pfa" : "db_sweep"},
                    {"guard", config.guard},
                    {"train", config.train},
                    {"training_cells", n_train_cells},
                    {"os_rank", os_rank},
                    {"frames", n_frames},
                    {"settings", settings_json},
                    {"series", series}};
  if (settings.size() == 1) {
    // Single-setting runs lift their aggregates to the top level so that
    // cmd_report can tabulate them alongside pipeline runs.
    const json& s = settings_json.front();
    for (const char* key : {"alarm_rate", "mean_rpcdl", "total_clutter", "mean_chamfer",
                            "mean_modified_hausdorff"})
      aggregate[key] = s.at(key);
  }
  io::write_text_file(out_dir / "metrics" / "aggregate.json", aggregate.dump(2) + "\n");

  const json manifest = {{"format", "radarvi-cfar"},
                         {"version", 1},
                         {"files", io::directory_manifest(out_dir)}};
  io::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return aggregate;
}

// ---------------------------------------------------------------------------
// report

json cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir,
                const LogFn& log) {
  if (run_dirs.empty()) throw MissingInput("no run directories given");

  struct RunEntry {
    std::string label;
    json aggregate;
  };
  std::vector<RunEntry> runs;
  std::set<std::string> labels;
  for (const fs::path& dir : run_dirs) {
    const fs::path file = dir / "metrics" / "aggregate.json";
    if (!fs::exists(file))
      throw MissingInput("run directory missing metrics/aggregate.json: " + dir.string());
    json aggregate;
    try {
      aggregate = io::load_json_file(file);
    } catch (const InvalidConfig& e) {
      throw MissingInput("malformed aggregate metrics in " + dir.string() + ": " + e.what());
    }
    std::string label = dir.filename().string();
    if (label.empty()) label = dir.parent_path().filename().string();
    while (labels.contains(label)) label += "+";
    labels.insert(label);
    runs.push_back({label, std::move(aggregate)});
  }

  // Tabulated metrics: a fixed candidate order, rows included when any run
  // reports a numeric value.
  const std::vector<std::string> candidates = {
      "frames",        "frames_evaluated", "mean_rpcdl",
      "total_clutter", "mean_chamfer",     "mean_modified_hausdorff",
      "total_flagged", "total_added",      "mean_transform_consistency",
      "alarm_rate",    "warning_count"};
  std::vector<std::string> rows;
  for (const std::string& key : candidates)
    for (const RunEntry& run : runs)
      if (run.aggregate.contains(key) && run.aggregate.at(key).is_number()) {
        rows.push_back(key);
        break;
      }

  const auto cell = [&](const RunEntry& run, const std::string& key) -> std::string {
    if (!run.aggregate.contains(key) || !run.aggregate.at(key).is_number()) return "-";
    return fmt(run.aggregate.at(key).get<double>());
  };

  std::string table;
  std::string csv = "metric";
  for (const RunEntry& run : runs) csv += "," + run.label;
  csv += "\n";
  if (runs.size() == 1) {
    // Degenerate single-run layout: key-value listing.
    table += "run: " + runs.front().label + "\n";
    std::size_t width = 0;
    for (const std::string& key : rows) width = std::max(width, key.size());
    for (const std::string& key : rows)
      table += "  " + key + std::string(width - key.size() + 2, ' ') +
               cell(runs.front(), key) + "\n";
  } else {
    std::vector<std::size_t> widths;
    std::size_t name_width = std::string("metric").size();
    for (const std::string& key : rows) name_width = std::max(name_width, key.size());
    for (const RunEntry& run : runs) {
      std::size_t wcol = run.label.size();
      for (const std::string& key : rows) wcol = std::max(wcol, cell(run, key).size());
      widths.push_back(wcol);
    }
    const auto pad = [](const std::string& s, std::size_t n) {
      return s + std::string(n - s.size(), ' ');
    };
    table += pad("metric", name_width);
    for (std::size_t c = 0; c < runs.size(); ++c)
      table += "  " + pad(runs[c].label, widths[c]);
    table += "\n";
    for (const std::string& key : rows) {
      table += pad(key, name_width);
      for (std::size_t c = 0; c < runs.size(); ++c)
        table += "  " + pad(cell(runs[c], key), widths[c]);
      table += "\n";
    }
  }
  for (const std::string& key : rows) {
    csv += key;
    for (const RunEntry& run : runs) {
      const std::string v = cell(run, key);
      csv += ",";
      if (v != "-") csv += v;
    }
    csv += "\n";
  }

  // Plot-data series straight from each run's embedded per-frame (pipeline)
  // or per-setting (CFAR sweep) records.
  std::string density = "run,label,clutter_count,rpcdl\n";
  std::string similarity = "run,label,chamfer,modified_hausdorff\n";
  const auto series_cell = [](const json& row, const char* key) -> std::string {
    if (!row.contains(key) || !row.at(key).is_number()) return "";
    return io::format_double(row.at(key).get<double>());
  };
  for (const RunEntry& run : runs) {
    if (!run.aggregate.contains("series")) continue;
    for (const json& row : run.aggregate.at("series")) {
      const std::string label = row.value("label", std::string());
      density += run.label + "," + label + "," + series_cell(row, "clutter_count") + "," +
                 series_cell(row, "rpcdl") + "\n";
      similarity += run.label + "," + label + "," + series_cell(row, "chamfer") + "," +
                    series_cell(row, "modified_hausdorff") + "\n";
    }
  }

  fs::create_directories(out_dir);
  io::write_text_file(out_dir / "report.txt", table);
  io::write_text_file(out_dir / "report_table.csv", csv);
  io::write_text_file(out_dir / "density_series.csv", density);
  io::write_text_file(out_dir / "similarity_series.csv", similarity);
  const json manifest = {{"format", "radarvi-report"},
                         {"version", 1},
                         {"files", io::directory_manifest(out_dir)}};
  io::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::istringstream lines(table);
  std::string line;
  while (std::getline(lines, line)) say(log, line);

  json result = {{"format", "radarvi-report"}, {"runs", json::array()}};
  for (const RunEntry& run : runs) result["runs"].push_back(run.label);
  json metrics = json::object();
  for (const std::string& key : rows) {
    json per_run = json::object();
    for (const RunEntry& run : runs)
      per_run[run.label] = run.aggregate.contains(key) ? run.aggregate.at(key) : json();
    metrics[key] = per_run;
  }
  result["metrics"] = metrics;
  return result;
}

}  // namespace radarvi::pipeline
