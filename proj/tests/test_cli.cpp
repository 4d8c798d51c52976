#include <doctest.h>

#include <filesystem>
#include <string>

#include "radarvi/io.hpp"
#include "radarvi/sim.hpp"
#include "support.hpp"

using namespace radarvi;
namespace fs = std::filesystem;
using testsupport::run_cli;

namespace {

void write_scene_config(const fs::path& path, std::uint64_t seed, bool with_rdm = false) {
  io::write_text_file(path, testsupport::tiny_scene_config(seed, with_rdm).to_json().dump(2) +
                                "\n");
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and argument errors") {
  testsupport::TempDir tmp("cli_args");
  const auto help = run_cli({"--help"}, tmp.path());
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("simulate") != std::string::npos);
  CHECK(help.output.find("report") != std::string::npos);

  CHECK(run_cli({}, tmp.path()).exit_code != 0);                      // subcommand required
  CHECK(run_cli({"frobnicate"}, tmp.path()).exit_code != 0);          // unknown verb
  CHECK(run_cli({"simulate", "--config", "x"}, tmp.path()).exit_code != 0);  // --out missing
}

TEST_CASE("simulate verb generates a scene deterministically") {
  testsupport::TempDir tmp("cli_sim");
  write_scene_config(tmp.path() / "scene.json", 61);

  const auto quiet_run = run_cli({"simulate", "--config", (tmp.path() / "scene.json").string(),
                                  "--out", (tmp.path() / "a").string()},
                                 tmp.path());
  CHECK(quiet_run.exit_code == 0);
  CHECK(quiet_run.output.empty());  // progress only with --verbose
  CHECK(fs::exists(tmp.path() / "a" / "manifest.json"));

  const auto verbose_run =
      run_cli({"simulate", "--config", (tmp.path() / "scene.json").string(), "--out",
               (tmp.path() / "b").string(), "--verbose"},
              tmp.path());
  CHECK(verbose_run.exit_code == 0);
  CHECK(!verbose_run.output.empty());

  CHECK(io::read_text_file(tmp.path() / "a" / "manifest.json") ==
        io::read_text_file(tmp.path() / "b" / "manifest.json"));
}

TEST_CASE("simulate verb maps failures onto exit codes") {
  testsupport::TempDir tmp("cli_sim_err");
  CHECK(run_cli({"simulate", "--config", (tmp.path() / "gone.json").string(), "--out",
                 (tmp.path() / "out").string()},
                tmp.path())
            .exit_code == 4);  // missing input

  io::write_text_file(tmp.path() / "broken.json", "{oops");
  CHECK(run_cli({"simulate", "--config", (tmp.path() / "broken.json").string(), "--out",
                 (tmp.path() / "out").string()},
                tmp.path())
            .exit_code == 2);  // invalid config

  write_scene_config(tmp.path() / "scene.json", 62);
  io::json j = io::load_json_file(tmp.path() / "scene.json");
  j["unknown_key"] = true;
  io::write_text_file(tmp.path() / "unknown.json", j.dump(2) + "\n");
  CHECK(run_cli({"simulate", "--config", (tmp.path() / "unknown.json").string(), "--out",
                 (tmp.path() / "out").string()},
                tmp.path())
            .exit_code == 2);
}

TEST_CASE("run verb resolves the scene relative to its config file") {
  testsupport::TempDir tmp("cli_run");
  write_scene_config(tmp.path() / "scene.json", 63);
  REQUIRE(run_cli({"simulate", "--config", (tmp.path() / "scene.json").string(), "--out",
                   (tmp.path() / "scene").string()},
                  tmp.path())
              .exit_code == 0);

  io::write_text_file(tmp.path() / "run.json",
                      io::json{{"scene_dir", "scene"}, {"pose_source", "truth"}}.dump(2) + "\n");
  const auto run = run_cli({"run", "--config", (tmp.path() / "run.json").string(), "--out",
                            (tmp.path() / "out").string(), "--threads", "2"},
                           tmp.path());
  CHECK(run.exit_code == 0);
  CHECK(fs::exists(tmp.path() / "out" / "metrics" / "aggregate.json"));
  const io::json agg = io::load_json_file(tmp.path() / "out" / "metrics" / "aggregate.json");
  CHECK(agg.at("frames").get<int>() == 4);

  SUBCASE("missing scene and malformed config") {
    io::write_text_file(tmp.path() / "lost.json",
                        io::json{{"scene_dir", "nowhere"}}.dump(2) + "\n");
    CHECK(run_cli({"run", "--config", (tmp.path() / "lost.json").string(), "--out",
                   (tmp.path() / "out2").string()},
                  tmp.path())
              .exit_code == 4);
    io::write_text_file(tmp.path() / "bad.json", "[1, 2]\n");
    CHECK(run_cli({"run", "--config", (tmp.path() / "bad.json").string(), "--out",
                   (tmp.path() / "out3").string()},
                  tmp.path())
              .exit_code == 2);
  }

  SUBCASE("report verb prints the comparison table") {
    const auto rep = run_cli({"report", (tmp.path() / "out").string(), "--out",
                              (tmp.path() / "rep").string()},
                             tmp.path());
    CHECK(rep.exit_code == 0);
    CHECK(rep.output.rfind("run: out", 0) == 0);  // single-run layout on stdout
    CHECK(fs::exists(tmp.path() / "rep" / "report_table.csv"));

    CHECK(run_cli({"report", (tmp.path() / "hollow").string(), "--out",
                   (tmp.path() / "rep2").string()},
                  tmp.path())
              .exit_code == 4);
  }
}

TEST_CASE("cfar verb needs range-Doppler data") {
  testsupport::TempDir tmp("cli_cfar");
  write_scene_config(tmp.path() / "scene.json", 64, true);
  REQUIRE(run_cli({"simulate", "--config", (tmp.path() / "scene.json").string(), "--out",
                   (tmp.path() / "scene").string()},
                  tmp.path())
              .exit_code == 0);

  io::write_text_file(
      tmp.path() / "cfar.json",
      io::json{{"scene_dir", "scene"}, {"guard", 1}, {"train", 2}}.dump(2) + "\n");
  const auto ok = run_cli({"cfar", "--config", (tmp.path() / "cfar.json").string(), "--out",
                           (tmp.path() / "out").string()},
                          tmp.path());
  CHECK(ok.exit_code == 0);
  CHECK(fs::exists(tmp.path() / "out" / "metrics" / "aggregate.json"));

  // A scene exported without RDM frames cannot feed the detector.
  write_scene_config(tmp.path() / "plain.json", 65, false);
  REQUIRE(run_cli({"simulate", "--config", (tmp.path() / "plain.json").string(), "--out",
                   (tmp.path() / "plain").string()},
                  tmp.path())
              .exit_code == 0);
  io::write_text_file(tmp.path() / "cfar_plain.json",
                      io::json{{"scene_dir", "plain"}}.dump(2) + "\n");
  CHECK(run_cli({"cfar", "--config", (tmp.path() / "cfar_plain.json").string(), "--out",
                 (tmp.path() / "out2").string()},
                tmp.path())
            .exit_code == 4);
}

}  // TEST_SUITE
