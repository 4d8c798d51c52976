#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "radarvi/errors.hpp"
#include "radarvi/io.hpp"
#include "radarvi/pipeline.hpp"
#include "radarvi/sim.hpp"
#include "support.hpp"

using namespace radarvi;
using namespace radarvi::pipeline;
namespace fs = std::filesystem;

namespace {

// Swallows progress lines; tests that care capture them instead.
const LogFn quiet = [](const std::string&) {};

// Exports the shared tiny scene once per binary run.
const fs::path& shared_scene(bool with_rdm) {
  static testsupport::TempDir tmp("pipeline_scene");
  static fs::path dirs[2];
  fs::path& dir = dirs[with_rdm ? 1 : 0];
  if (dir.empty()) {
    dir = tmp.path() / (with_rdm ? "rdm" : "plain");
    sim::export_scene(sim::generate_scene(testsupport::tiny_scene_config(31, with_rdm)), dir);
  }
  return dir;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("parallel_for covers every index exactly once") {
  for (const int threads : {1, 3, 0}) {
    std::vector<int> out(997, -1);
    parallel_for(static_cast<int>(out.size()), threads, [&](int i) { out[i] = 2 * i; });
    for (int i = 0; i < static_cast<int>(out.size()); ++i) REQUIRE(out[i] == 2 * i);
  }
  parallel_for(0, 4, [&](int) { REQUIRE(false); });

  std::atomic<int> done{0};
  CHECK_THROWS_AS(parallel_for(500, 4,
                               [&](int i) {
                                 if (i == 137) throw InvalidConfig("boom");
                                 done.fetch_add(1);
                               }),
                  InvalidConfig);
  CHECK(done.load() < 500);
}

TEST_CASE("run config parsing resolves paths and rejects bad fields") {
  io::json j = {{"scene_dir", "scenes/a"}};
  RunConfig c = RunConfig::from_json(j, "/base");
  CHECK(c.scene_dir == fs::path("/base/scenes/a"));
  CHECK(c.dynamic_reconstruction);
  CHECK(c.spurious_filter);
  CHECK(c.pose_source == PoseSource::kEkf);
  CHECK(c.delta_source == DeltaSource::kReconstruction);
  CHECK(c.filter_frames == 5);
  CHECK(c.filter_d0 == 0.5);
  CHECK(c.filter_percentile == 5.0);
  CHECK(c.metric_delta == 1.0);

  j = {{"scene_dir", "/abs/scene"},
       {"pose_source", "truth"},
       {"delta_source", "truth"},
       {"filter", {{"frames", 3}, {"d0", 0.4}, {"percentile", 10.0}, {"adaptive", false}}},
       {"metrics", {{"delta", 2.0}}}};
  c = RunConfig::from_json(j, "/base");
  CHECK(c.scene_dir == fs::path("/abs/scene"));  // absolute paths pass through
  CHECK(c.pose_source == PoseSource::kTruth);
  CHECK(c.delta_source == DeltaSource::kTruth);
  CHECK(c.filter_frames == 3);
  CHECK_FALSE(c.filter_adaptive);
  CHECK(RunConfig::from_json(c.to_json(), "/elsewhere").to_json() == c.to_json());

  CHECK_THROWS_AS(RunConfig::from_json(io::json::object(), "/b"), InvalidConfig);  // no scene
  CHECK_THROWS_AS(RunConfig::from_json({{"scene_dir", "s"}, {"bogus", 1}}, "/b"),
                  InvalidConfig);
  CHECK_THROWS_AS(
      RunConfig::from_json({{"scene_dir", "s"}, {"filter", {{"bogus", 1}}}}, "/b"),
      InvalidConfig);
  CHECK_THROWS_AS(RunConfig::from_json({{"scene_dir", "s"}, {"pose_source", "magic"}}, "/b"),
                  InvalidConfig);
  CHECK_THROWS_AS(
      RunConfig::from_json({{"scene_dir", "s"}, {"filter", {{"frames", 1}}}}, "/b"),
      InvalidConfig);  // window must cover at least two frames
}

TEST_CASE("cfar config parsing mirrors the run config rules") {
  CfarRunConfig c = CfarRunConfig::from_json({{"scene_dir", "s"}}, "/base");
  CHECK(c.scene_dir == fs::path("/base/s"));
  CHECK(c.detector == CfarRunConfig::Detector::kCa);
  CHECK(c.mode == CfarRunConfig::Mode::kPfa);
  CHECK(c.guard == 2);
  CHECK(c.train == 4);
  CHECK(c.os_rank == 0);

  c = CfarRunConfig::from_json({{"scene_dir", "/s"},
                                {"detector", "os"},
                                {"mode", "db_sweep"},
                                {"db_min", 2.0},
                                {"db_max", 6.0},
                                {"db_step", 2.0}},
                               "/base");
  CHECK(c.detector == CfarRunConfig::Detector::kOs);
  CHECK(c.mode == CfarRunConfig::Mode::kDbSweep);
  CHECK(CfarRunConfig::from_json(c.to_json(), "/x").to_json() == c.to_json());

  CHECK_THROWS_AS(CfarRunConfig::from_json({{"scene_dir", "s"}, {"detector", "zz"}}, "/b"),
                  InvalidConfig);
  CHECK_THROWS_AS(CfarRunConfig::from_json({{"scene_dir", "s"}, {"nope", 1}}, "/b"),
                  InvalidConfig);
  CHECK_THROWS_AS(CfarRunConfig::from_json(
                      {{"scene_dir", "s"}, {"db_min", 9.0}, {"db_max", 1.0}}, "/b"),
                  InvalidConfig);
}

TEST_CASE("simulate command exports a scene and is rerun-stable") {
  testsupport::TempDir tmp("pipeline_sim");
  io::write_text_file(tmp.path() / "scene.json",
                      testsupport::tiny_scene_config(41).to_json().dump(2) + "\n");
  std::vector<std::string> lines;
  const io::json manifest =
      cmd_simulate(tmp.path() / "scene.json", tmp.path() / "a",
                   [&](const std::string& s) { lines.push_back(s); });
  CHECK(manifest.at("format") == "radarvi-scene");
  CHECK(fs::exists(tmp.path() / "a" / "manifest.json"));
  CHECK(!lines.empty());

  cmd_simulate(tmp.path() / "scene.json", tmp.path() / "b", quiet);
  CHECK(io::read_text_file(tmp.path() / "a" / "manifest.json") ==
        io::read_text_file(tmp.path() / "b" / "manifest.json"));

  CHECK_THROWS_AS(cmd_simulate(tmp.path() / "gone.json", tmp.path() / "c", quiet),
                  MissingInput);
}

TEST_CASE("run command enhances the cloud and writes the full output tree") {
  testsupport::TempDir tmp("pipeline_run");
  RunConfig rc;
  rc.scene_dir = shared_scene(false);
  rc.pose_source = PoseSource::kTruth;
  std::vector<std::string> lines;
  const io::json agg = cmd_run(rc, tmp.path() / "out", 1,
                               [&](const std::string& s) { lines.push_back(s); });

  CHECK(agg.at("format") == "radarvi-run");
  CHECK(agg.at("frames").get<int>() == 4);
  CHECK(agg.at("frames_evaluated").get<int>() == 4);
  CHECK(agg.at("series").size() == 4);
  CHECK(agg.at("mean_chamfer").get<double>() >= 0.0);
  CHECK(agg.at("mean_rpcdl").get<double>() > 0.0);
  CHECK(agg.at("mean_transform_consistency").get<double>() >= 0.0);
  CHECK(agg.at("total_added").get<int>() > 0);
  CHECK(!lines.empty());

  for (const char* rel :
       {"run_config.json", "poses/used.csv", "clouds/enhanced_00000.csv",
        "clouds/enhanced_00003.csv", "metrics/frame_00000.json", "metrics/aggregate.json",
        "manifest.json"})
    CHECK_MESSAGE(fs::exists(tmp.path() / "out" / rel), rel);

  const PointCloudFrame enhanced =
      io::read_cloud_csv(tmp.path() / "out" / "clouds" / "enhanced_00003.csv");
  CHECK(enhanced.size() > 0);
  const io::json frame_metrics =
      io::load_json_file(tmp.path() / "out" / "metrics" / "frame_00003.json");
  CHECK(frame_metrics.at("metrics").at("chamfer").is_number());
  CHECK(frame_metrics.at("points_enhanced").get<int>() ==
        static_cast<int>(enhanced.size()));
}

TEST_CASE("run command toggles disable their stages") {
  testsupport::TempDir tmp("pipeline_toggle");
  RunConfig rc;
  rc.scene_dir = shared_scene(false);
  rc.pose_source = PoseSource::kTruth;

  rc.dynamic_reconstruction = false;
  const io::json no_dyn = cmd_run(rc, tmp.path() / "nodyn", 1, quiet);
  CHECK(no_dyn.at("total_added").get<int>() == 0);

  rc.dynamic_reconstruction = true;
  rc.spurious_filter = false;
  const io::json no_filter = cmd_run(rc, tmp.path() / "nofilter", 1, quiet);
  CHECK(no_filter.at("total_flagged").get<int>() == 0);
}

TEST_CASE("run command fuses pose streams when asked for the ekf source") {
  testsupport::TempDir tmp("pipeline_ekf");
  RunConfig rc;
  rc.scene_dir = shared_scene(false);
  rc.pose_source = PoseSource::kEkf;
  const io::json agg = cmd_run(rc, tmp.path() / "out", 1, quiet);
  REQUIRE(agg.contains("ekf"));
  CHECK(agg.at("ekf").at("updates").get<int>() > 0);
  CHECK(agg.at("ekf").at("trace_after_first").get<double>() <
        agg.at("ekf").at("trace_before_first").get<double>());
}

TEST_CASE("run command is thread-count invariant") {
  testsupport::TempDir tmp("pipeline_threads");
  RunConfig rc;
  rc.scene_dir = shared_scene(false);
  rc.pose_source = PoseSource::kTruth;
  const io::json a = cmd_run(rc, tmp.path() / "t1", 1, quiet);
  const io::json b = cmd_run(rc, tmp.path() / "t3", 3, quiet);
  CHECK(a.dump() == b.dump());
  CHECK(io::read_text_file(tmp.path() / "t1" / "manifest.json") ==
        io::read_text_file(tmp.path() / "t3" / "manifest.json"));
}

TEST_CASE("run command surfaces missing scenes") {
  testsupport::TempDir tmp("pipeline_missing");
  RunConfig rc;
  rc.scene_dir = tmp.path() / "empty";
  fs::create_directories(rc.scene_dir);
  CHECK_THROWS_AS(cmd_run(rc, tmp.path() / "out", 1, quiet), MissingInput);
}

TEST_CASE("cfar command evaluates detector output against the truth") {
  testsupport::TempDir tmp("pipeline_cfar");
  CfarRunConfig cc;
  cc.scene_dir = shared_scene(true);
  cc.guard = 1;
  cc.train = 2;

  SUBCASE("single-pfa mode lifts its metrics to the top level") {
    const io::json agg = cmd_cfar(cc, tmp.path() / "out", 1, quiet);
    CHECK(agg.at("format") == "radarvi-cfar");
    CHECK(agg.at("alarm_rate").is_number());
    CHECK(agg.at("alarm_rate").get<double>() >= 0.0);
    CHECK(agg.at("total_clutter").is_number());
    for (const char* rel : {"cfar_config.json", "metrics/aggregate.json", "manifest.json",
                            "clouds/pfa/cloud_00000.csv"})
      CHECK_MESSAGE(fs::exists(tmp.path() / "out" / rel), rel);
    CHECK_FALSE(fs::exists(tmp.path() / "out" / "sweep.csv"));
  }

  SUBCASE("db sweeps emit one setting per offset plus the sweep table") {
    cc.mode = CfarRunConfig::Mode::kDbSweep;
    cc.db_min = 2.0;
    cc.db_max = 6.0;
    cc.db_step = 2.0;
    const io::json agg = cmd_cfar(cc, tmp.path() / "sweep", 1, quiet);
    CHECK(agg.at("settings").size() == 3);
    REQUIRE(fs::exists(tmp.path() / "sweep" / "sweep.csv"));
    const auto rows = io::read_csv_lines(
        tmp.path() / "sweep" / "sweep.csv",
        "offset_db,total_points,alarm_rate,mean_rpcdl,mean_chamfer,mean_modified_hausdorff");
    CHECK(rows.size() == 3);
    for (const char* rel : {"clouds/db_2/cloud_00000.csv", "clouds/db_6/cloud_00003.csv"})
      CHECK_MESSAGE(fs::exists(tmp.path() / "sweep" / rel), rel);
  }

  SUBCASE("order-statistic detector picks a default rank") {
    cc.detector = CfarRunConfig::Detector::kOs;
    const io::json agg = cmd_cfar(cc, tmp.path() / "os", 1, quiet);
    CHECK(agg.at("alarm_rate").is_number());
  }

  SUBCASE("scenes without range-Doppler data are rejected") {
    cc.scene_dir = shared_scene(false);
    CHECK_THROWS_AS(cmd_cfar(cc, tmp.path() / "none", 1, quiet), MissingInput);
  }
}

TEST_CASE("report command tabulates runs and emits plot series") {
  testsupport::TempDir tmp("pipeline_report");
  RunConfig rc;
  rc.scene_dir = shared_scene(false);
  rc.pose_source = PoseSource::kTruth;
  cmd_run(rc, tmp.path() / "baseline", 1, quiet);
  rc.dynamic_reconstruction = false;
  rc.spurious_filter = false;
  cmd_run(rc, tmp.path() / "ablated", 1, quiet);

  SUBCASE("two runs side by side") {
    const io::json report =
        cmd_report({tmp.path() / "baseline", tmp.path() / "ablated"}, tmp.path() / "rep", quiet);
    CHECK(report.at("format") == "radarvi-report");
    REQUIRE(report.at("runs").size() == 2);
    CHECK(report.at("runs")[0] == "baseline");
    CHECK(report.at("runs")[1] == "ablated");
    CHECK(report.at("metrics").at("mean_chamfer").at("baseline").is_number());
    CHECK(report.at("metrics").at("total_added").at("ablated") == 0);

    const std::string table = io::read_text_file(tmp.path() / "rep" / "report.txt");
    CHECK(table.find("baseline") != std::string::npos);
    CHECK(table.find("mean_chamfer") != std::string::npos);
    const std::string density = io::read_text_file(tmp.path() / "rep" / "density_series.csv");
    CHECK(density.find("baseline,frame_0,") != std::string::npos);
    for (const char* rel : {"report.txt", "report_table.csv", "density_series.csv",
                            "similarity_series.csv", "manifest.json"})
      CHECK_MESSAGE(fs::exists(tmp.path() / "rep" / rel), rel);
  }

  SUBCASE("a single run degrades to a key-value listing") {
    cmd_report({tmp.path() / "baseline"}, tmp.path() / "single", quiet);
    const std::string table = io::read_text_file(tmp.path() / "single" / "report.txt");
    CHECK(table.rfind("run: baseline\n", 0) == 0);
  }

  SUBCASE("runs without aggregates are rejected") {
    fs::create_directories(tmp.path() / "hollow");
    CHECK_THROWS_AS(cmd_report({tmp.path() / "hollow"}, tmp.path() / "bad", quiet),
                    MissingInput);
    CHECK_THROWS_AS(cmd_report({}, tmp.path() / "bad", quiet), MissingInput);
  }
}

}  // TEST_SUITE
