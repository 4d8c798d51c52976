#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radarvi/reconstruction.hpp"
#include "radarvi/rigid_motion.hpp"
#include "radarvi/sim.hpp"

// End-to-end commands behind the CLI verbs. Each command is a pure function
// of its inputs: reruns over unchanged inputs produce byte-identical output
// trees (and therefore identical manifests).
namespace radarvi::pipeline {

// Which pose stream supplies camera/radar motion to the downstream stages.
enum class PoseSource { kEkf, kVi, kTruth };

// Where the per-object translations used by the stability filter come from.
enum class DeltaSource { kReconstruction, kTruth };

struct RunConfig {
  std::filesystem::path scene_dir;
  bool dynamic_reconstruction = true;  // reconstruct + inject dynamic points
  bool spurious_filter = true;         // drop temporally unstable points
  PoseSource pose_source = PoseSource::kEkf;
  DeltaSource delta_source = DeltaSource::kReconstruction;
  SolverOptions solver;
  EkfOptions ekf;
  int filter_frames = 5;
  double filter_d0 = 0.5;
  double filter_percentile = 5.0;
  bool filter_adaptive = true;
  double metric_delta = 1.0;  // meters, clutter threshold

  void validate() const;
  // base_dir anchors relative scene_dir values (usually the config file's
  // directory).
  static RunConfig from_json(const nlohmann::ordered_json& j,
                             const std::filesystem::path& base_dir);
  nlohmann::ordered_json to_json() const;
};

struct CfarRunConfig {
  std::filesystem::path scene_dir;  // must contain rdm/ and truth/
  enum class Detector { kCa, kOs };
  enum class Mode { kPfa, kDbSweep };
  Detector detector = Detector::kCa;
  Mode mode = Mode::kPfa;
  double pfa = 1e-2;
  double db_min = 1.0;  // dB-offset sweep bounds, inclusive
  double db_max = 8.0;
  double db_step = 1.0;
  int guard = 2;
  int train = 4;
  int os_rank = 0;  // 0 picks 3/4 of the training-cell count
  double metric_delta = 1.0;

  void validate() const;
  static CfarRunConfig from_json(const nlohmann::ordered_json& j,
                                 const std::filesystem::path& base_dir);
  nlohmann::ordered_json to_json() const;
};

// Progress/warning sink; commands call it with one line at a time.
using LogFn = std::function<void(const std::string&)>;

// Generates the scene described by the JSON config file and exports it to
// out_dir; returns the export manifest.
nlohmann::ordered_json cmd_simulate(const std::filesystem::path& config_path,
                                    const std::filesystem::path& out_dir, const LogFn& log);

// Runs the enhancement pipeline over an exported scene: per-pair dynamic
// reconstruction, pose fusion, flow-based transform estimation, stability
// filtering and metric evaluation; returns the aggregate metrics JSON.
nlohmann::ordered_json cmd_run(const RunConfig& config, const std::filesystem::path& out_dir,
                               int threads, const LogFn& log);

// Runs a CFAR detector over the scene's range-Doppler frames, back-projects
// detections into clouds and evaluates them; returns the aggregate JSON.
nlohmann::ordered_json cmd_cfar(const CfarRunConfig& config,
                                const std::filesystem::path& out_dir, int threads,
                                const LogFn& log);

// Cross-run comparison table plus plot-data CSV series; returns the table
// JSON. Every run_dir must contain metrics/aggregate.json.
nlohmann::ordered_json cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                                  const std::filesystem::path& out_dir, const LogFn& log);

// Deterministic parallel map: calls fn(i) for i in [0, n) using the given
// worker count (0 = hardware concurrency), then returns. fn must only write
// to per-index slots.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace radarvi::pipeline
