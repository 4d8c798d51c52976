#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radarvi/cfar.hpp"
#include "radarvi/errors.hpp"
#include "radarvi/geometry.hpp"
#include "radarvi/io.hpp"
#include "radarvi/metrics.hpp"
#include "radarvi/pipeline.hpp"
#include "radarvi/reconstruction.hpp"
#include "radarvi/rigid_motion.hpp"
#include "radarvi/sim.hpp"
#include "radarvi/spurious.hpp"

namespace py = pybind11;
using namespace radarvi;

namespace {

FeatureTrack make_track(const std::pair<double, double>& prev,
                        const std::pair<double, double>& curr, int object_id) {
  FeatureTrack t;
  t.prev_pixel = {prev.first, prev.second};
  t.curr_pixel = {curr.first, curr.second};
  t.object_id = object_id;
  return t;
}

std::vector<FeatureTrack> make_tracks(
    const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>& pixels,
    int object_id) {
  std::vector<FeatureTrack> tracks;
  tracks.reserve(pixels.size());
  for (const auto& [prev, curr] : pixels) tracks.push_back(make_track(prev, curr, object_id));
  return tracks;
}

RangeDopplerMatrix make_rdm(const Eigen::MatrixXd& power, double range_res, double doppler_res) {
  RangeDopplerMatrix rdm;
  rdm.range_bins = static_cast<int>(power.rows());
  rdm.doppler_bins = static_cast<int>(power.cols());
  rdm.range_res = range_res;
  rdm.doppler_res = doppler_res;
  rdm.power.resize(power.size());
  for (int r = 0; r < power.rows(); ++r)
    for (int d = 0; d < power.cols(); ++d) rdm.at(r, d) = power(r, d);
  rdm.validate();
  return rdm;
}

py::list detections_list(const std::vector<Detection>& dets) {
  py::list out;
  for (const Detection& d : dets)
    out.append(py::make_tuple(d.range_bin, d.doppler_bin, d.snr_db));
  return out;
}

PointCloudFrame make_frame(const std::vector<Eigen::Vector3d>& points,
                           const std::vector<int>& labels) {
  PointCloudFrame f;
  f.points = points;
  f.labels = labels.empty() ? std::vector<int>(points.size(), kLabelUnknown) : labels;
  f.validate();
  return f;
}

std::string run_and_dump(const nlohmann::ordered_json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Radar point-cloud enhancement with visual-inertial supervision";

  py::register_exception<Error>(m, "RadarviError", PyExc_RuntimeError);

  py::class_<RigidTransform>(m, "RigidTransform")
      .def(py::init<>())
      .def(py::init([](const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
             RigidTransform t{rotation, translation};
             if (!t.is_valid(1e-6)) throw InvalidConfig("rotation is not a proper rotation");
             return t;
           }),
           py::arg("rotation"), py::arg("translation"))
      .def_readwrite("rotation", &RigidTransform::rotation)
      .def_readwrite("translation", &RigidTransform::translation)
      .def_static(
          "from_quaternion",
          [](const Eigen::Vector4d& xyzw, const Eigen::Vector3d& t) {
            return RigidTransform::from_quaternion(
                Eigen::Quaterniond(xyzw[3], xyzw[0], xyzw[1], xyzw[2]), t);
          },
          py::arg("xyzw"), py::arg("translation"))
      .def("apply", &RigidTransform::apply, py::arg("point"))
      .def("inverse", &RigidTransform::inverse)
      .def(
          "quaternion",
          [](const RigidTransform& t) {
            const Eigen::Quaterniond q = t.quaternion();
            return Eigen::Vector4d(q.x(), q.y(), q.z(), q.w());
          },
          "Rotation as [x, y, z, w]")
      .def("__mul__",
           [](const RigidTransform& a, const RigidTransform& b) { return a * b; })
      .def("__repr__", [](const RigidTransform& t) {
        return "RigidTransform(t=[" + io::format_double(t.translation.x()) + ", " +
               io::format_double(t.translation.y()) + ", " +
               io::format_double(t.translation.z()) + "])";
      });

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy) {
             CameraIntrinsics k{fx, fy, cx, cy};
             k.validate();
             return k;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"))
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy);

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("initial_lambda", &SolverOptions::initial_lambda)
      .def_readwrite("lambda_up", &SolverOptions::lambda_up)
      .def_readwrite("lambda_down", &SolverOptions::lambda_down)
      .def_readwrite("max_iterations", &SolverOptions::max_iterations)
      .def_readwrite("gradient_tolerance", &SolverOptions::gradient_tolerance)
      .def_readwrite("cost_tolerance", &SolverOptions::cost_tolerance)
      .def_readwrite("scene_depth_prior", &SolverOptions::scene_depth_prior)
      .def_readwrite("max_restarts", &SolverOptions::max_restarts)
      .def_readwrite("restart_step", &SolverOptions::restart_step);

  py::class_<ReconstructionSolution>(m, "ReconstructionSolution")
      .def_readonly("positions", &ReconstructionSolution::positions)
      .def_readonly("translation", &ReconstructionSolution::translation)
      .def_readonly("final_cost", &ReconstructionSolution::final_cost)
      .def_readonly("iterations", &ReconstructionSolution::iterations)
      .def_readonly("converged", &ReconstructionSolution::converged)
      .def_readonly("cost_history", &ReconstructionSolution::cost_history)
      .def_property_readonly("status", [](const ReconstructionSolution& s) {
        switch (s.status) {
          case SolveStatus::kConverged: return "converged";
          case SolveStatus::kMaxIterations: return "max_iterations";
          case SolveStatus::kDegenerate: return "degenerate";
          case SolveStatus::kFailed: return "failed";
        }
        return "failed";
      });

  m.def(
      "project",
      [](const CameraIntrinsics& k, const Eigen::Vector3d& p) {
        const PixelHomogeneous px = project(k, p);
        return py::make_tuple(px.u, px.v);
      },
      py::arg("intrinsics"), py::arg("point"), "Pinhole projection -> (u, v)");

  m.def(
      "triangulate_midpoint",
      [](const std::pair<double, double>& prev_pixel, const std::pair<double, double>& curr_pixel,
         const CameraIntrinsics& k, const RigidTransform& camera_transform) {
        return triangulate_midpoint(make_track(prev_pixel, curr_pixel, kLabelBackground), k,
                                    camera_transform);
      },
      py::arg("prev_pixel"), py::arg("curr_pixel"), py::arg("intrinsics"),
      py::arg("camera_transform"),
      "Midpoint triangulation of one static feature in the previous camera frame");

  m.def(
      "solve_reconstruction",
      [](const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>&
             pixels,
         const CameraIntrinsics& k, const RigidTransform& camera_transform,
         const SolverOptions& options) {
        ReconstructionProblem problem{make_tracks(pixels, 1), k, camera_transform};
        return solve_reconstruction(problem, options);
      },
      py::arg("pixel_pairs"), py::arg("intrinsics"), py::arg("camera_transform"),
      py::arg("options") = SolverOptions{},
      "Joint recovery of one rigid object's feature points and its shared translation "
      "from ((prev_u, prev_v), (curr_u, curr_v)) pixel pairs");

  m.def(
      "kabsch",
      [](const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst,
         const std::vector<double>& weights) {
        if (src.size() != dst.size())
          throw InvalidConfig("kabsch needs equally many source and destination points");
        std::vector<PointPair> pairs;
        pairs.reserve(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) pairs.emplace_back(src[i], dst[i]);
        return kabsch(pairs, weights);
      },
      py::arg("src"), py::arg("dst"), py::arg("weights") = std::vector<double>{},
      "Least-squares rigid transform src -> dst");

  m.def("transform_consistency_loss", &transform_consistency_loss, py::arg("estimate"),
        py::arg("reference"), py::arg("points"));

  m.def("chamfer", &chamfer, py::arg("a"), py::arg("b"));
  m.def("modified_hausdorff", &modified_hausdorff, py::arg("a"), py::arg("b"));
  m.def("rpcdl", &rpcdl, py::arg("cloud"), py::arg("truth"), py::arg("delta"));
  m.def(
      "evaluate_cloud",
      [](const std::vector<Eigen::Vector3d>& cloud, const std::vector<Eigen::Vector3d>& truth,
         double delta) {
        const MetricReport r = evaluate_cloud(cloud, truth, delta);
        py::dict out;
        out["rpcdl"] = r.rpcdl;
        out["clutter_count"] = r.clutter_count;
        out["chamfer"] = r.chamfer;
        out["modified_hausdorff"] = r.modified_hausdorff;
        return out;
      },
      py::arg("cloud"), py::arg("truth"), py::arg("delta"));

  m.def(
      "mark_spurious",
      [](const std::vector<std::vector<Eigen::Vector3d>>& frames,
         const std::vector<std::vector<int>>& labels,
         const std::vector<RigidTransform>& transforms, const std::vector<double>& delta_ts,
         const std::map<int, Eigen::Vector3d>& object_translations, double d0, double percentile,
         bool adaptive) {
        StabilityContext ctx;
        if (labels.size() != frames.size() && !labels.empty())
          throw InvalidConfig("labels must be given for every frame or for none");
        for (std::size_t i = 0; i < frames.size(); ++i)
          ctx.frames.push_back(
              make_frame(frames[i], labels.empty() ? std::vector<int>{} : labels[i]));
        ctx.transforms = transforms;
        ctx.delta_ts = delta_ts;
        ctx.object_translations = object_translations;
        ctx.d0 = d0;
        ctx.percentile = percentile;
        ctx.adaptive = adaptive;
        return mark_spurious(ctx).spurious;
      },
      py::arg("frames"), py::arg("labels"), py::arg("transforms"), py::arg("delta_ts"),
      py::arg("object_translations") = std::map<int, Eigen::Vector3d>{}, py::arg("d0") = 0.5,
      py::arg("percentile") = 5.0, py::arg("adaptive") = true,
      "Velocity-adaptive temporal-stability flags for frames[0] (newest first)");

  m.def(
      "ca_cfar",
      [](const Eigen::MatrixXd& power, double range_res, double doppler_res, int guard,
         int train, double pfa) {
        return detections_list(ca_cfar(make_rdm(power, range_res, doppler_res), guard, train,
                                       pfa));
      },
      py::arg("power"), py::arg("range_res"), py::arg("doppler_res"), py::arg("guard"),
      py::arg("train"), py::arg("pfa"),
      "Cell-averaging CFAR; returns (range_bin, doppler_bin, snr_db) tuples");

  m.def(
      "os_cfar",
      [](const Eigen::MatrixXd& power, double range_res, double doppler_res, int guard,
         int train, int rank, double pfa) {
        return detections_list(os_cfar(make_rdm(power, range_res, doppler_res), guard, train,
                                       rank, pfa));
      },
      py::arg("power"), py::arg("range_res"), py::arg("doppler_res"), py::arg("guard"),
      py::arg("train"), py::arg("rank"), py::arg("pfa"),
      "Order-statistic CFAR; returns (range_bin, doppler_bin, snr_db) tuples");

  m.def("ca_cfar_alpha", &ca_cfar_alpha, py::arg("n_train"), py::arg("pfa"));
  m.def("os_cfar_alpha", &os_cfar_alpha, py::arg("n_train"), py::arg("rank"), py::arg("pfa"));

  // End-to-end commands; each returns the aggregate/manifest JSON as a string.
  m.def(
      "simulate",
      [](const std::filesystem::path& config, const std::filesystem::path& out) {
        return run_and_dump(pipeline::cmd_simulate(config, out, {}));
      },
      py::arg("config"), py::arg("out"));
  m.def(
      "run",
      [](const std::string& config_json, const std::filesystem::path& base_dir,
         const std::filesystem::path& out, int threads) {
        const auto config = pipeline::RunConfig::from_json(
            io::parse_json(config_json, "<run config>"), base_dir);
        return run_and_dump(pipeline::cmd_run(config, out, threads, {}));
      },
      py::arg("config_json"), py::arg("base_dir"), py::arg("out"), py::arg("threads") = 0);
  m.def(
      "cfar",
      [](const std::string& config_json, const std::filesystem::path& base_dir,
         const std::filesystem::path& out, int threads) {
        const auto config = pipeline::CfarRunConfig::from_json(
            io::parse_json(config_json, "<cfar config>"), base_dir);
        return run_and_dump(pipeline::cmd_cfar(config, out, threads, {}));
      },
      py::arg("config_json"), py::arg("base_dir"), py::arg("out"), py::arg("threads") = 0);
  m.def(
      "report",
      [](const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out) {
        return run_and_dump(pipeline::cmd_report(runs, out, {}));
      },
      py::arg("runs"), py::arg("out"));
}
