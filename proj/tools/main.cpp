#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "radarvi/errors.hpp"
#include "radarvi/io.hpp"
#include "radarvi/pipeline.hpp"

namespace fs = std::filesystem;
namespace pl = radarvi::pipeline;

namespace {

int dispatch(const CLI::App& app, const std::string& config_path, const std::string& out_dir,
             const std::vector<std::string>& run_dirs, int threads, bool verbose) {
  const pl::LogFn chatter =
      verbose ? pl::LogFn([](const std::string& line) { std::cout << line << "\n"; })
              : pl::LogFn();
  // The report table always goes to stdout; it is the command's product.
  const pl::LogFn table = [](const std::string& line) { std::cout << line << "\n"; };

  if (app.got_subcommand("simulate")) {
    pl::cmd_simulate(config_path, out_dir, chatter);
  } else if (app.got_subcommand("run")) {
    const auto config = pl::RunConfig::from_json(radarvi::io::load_json_file(config_path),
                                                 fs::path(config_path).parent_path());
    pl::cmd_run(config, out_dir, threads, chatter);
  } else if (app.got_subcommand("cfar")) {
    const auto config = pl::CfarRunConfig::from_json(radarvi::io::load_json_file(config_path),
                                                     fs::path(config_path).parent_path());
    pl::cmd_cfar(config, out_dir, threads, chatter);
  } else if (app.got_subcommand("report")) {
    std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
    pl::cmd_report(dirs, out_dir, table);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radarvi: visual-inertial enhancement of sparse radar point clouds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> run_dirs;
  int threads = 0;
  bool verbose = false;

  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic scene from a JSON config");
  sim->add_option("--config", config_path, "scene config JSON file")->required();
  sim->add_option("--out", out_dir, "output scene directory")->required();
  sim->add_flag("--verbose", verbose, "print progress lines");

  CLI::App* run = app.add_subcommand("run", "Run the enhancement pipeline over a scene");
  run->add_option("--config", config_path, "run config JSON file")->required();
  run->add_option("--out", out_dir, "output run directory")->required();
  run->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
  run->add_flag("--verbose", verbose, "print progress lines");

  CLI::App* cfar = app.add_subcommand("cfar", "Run a CFAR baseline over range-Doppler frames");
  cfar->add_option("--config", config_path, "CFAR config JSON file")->required();
  cfar->add_option("--out", out_dir, "output run directory")->required();
  cfar->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
  cfar->add_flag("--verbose", verbose, "print progress lines");

  CLI::App* report = app.add_subcommand("report", "Compare run outputs in one table");
  report->add_option("runs", run_dirs, "run directories to compare")->required();
  report->add_option("--out", out_dir, "output report directory")->required();
  report->add_flag("--verbose", verbose, "print progress lines");

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(app, config_path, out_dir, run_dirs, threads, verbose);
  } catch (const radarvi::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const radarvi::IoFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const radarvi::MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const radarvi::MissingAngleMap& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const radarvi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
