#include <cinttypes>
#include <cstdio>
#include <map>
#include <set>
#include <string>

#include <Eigen/Geometry>

#include "radarvi/errors.hpp"
#include "radarvi/io.hpp"
#include "radarvi/sim.hpp"

namespace radarvi::sim {
namespace {

using io::json;
namespace fs = std::filesystem;

std::string numbered(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d.%s", stem, index, ext);
  return buf;
}

// ---------------------------------------------------------------------------
// Config JSON with path-anchored error messages.

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  throw InvalidConfig("config field '" + path + "': " + what);
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad_field(path, "expected an object");
  return j;
}

void check_known(const json& j, const std::string& path, std::set<std::string> keys) {
  for (const auto& [key, value] : j.items())
    if (!keys.contains(key)) bad_field(path.empty() ? key : path + "." + key,
                                       "unknown key");
}

double get_num(const json& j, const char* key, double def, const std::string& path) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) bad_field(path + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& j, const char* key, int def, const std::string& path) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad_field(path + key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& j, const char* key, bool def, const std::string& path) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_boolean()) bad_field(path + key, "expected a boolean");
  return v.get<bool>();
}

Eigen::Vector3d get_vec3(const json& j, const char* key, const Eigen::Vector3d& def,
                         const std::string& path) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number())
    bad_field(path + key, "expected an array of three numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json transform_json(const RigidTransform& t) {
  Eigen::Quaterniond q = t.quaternion().normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {{"translation", vec3_json(t.translation)},
          {"quaternion", json::array({q.x(), q.y(), q.z(), q.w()})}};
}

RigidTransform transform_from_json(const json& j, const std::string& path) {
  expect_object(j, path);
  const Eigen::Vector3d t = get_vec3(j, "translation", Eigen::Vector3d::Zero(), path + ".");
  const json& qj = j.at("quaternion");
  if (!qj.is_array() || qj.size() != 4) bad_field(path + ".quaternion", "expected 4 numbers");
  const Eigen::Quaterniond q(qj[3].get<double>(), qj[0].get<double>(), qj[1].get<double>(),
                             qj[2].get<double>());
  return RigidTransform::from_quaternion(q, t);
}

}  // namespace

SceneConfig SceneConfig::from_json(const json& j) {
  expect_object(j, "<root>");
  check_known(j, "", {"seed", "duration", "frame_rate", "trajectory", "camera", "background",
                      "objects", "reflectors", "radar", "flow", "poses"});
  SceneConfig c;
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                   s.get<std::int64_t>() < 0))
      bad_field("seed", "expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.duration = get_num(j, "duration", c.duration, "");
  c.frame_rate = get_num(j, "frame_rate", c.frame_rate, "");

  if (j.contains("trajectory")) {
    const json& t = expect_object(j.at("trajectory"), "trajectory");
    check_known(t, "trajectory",
                {"type", "start", "velocity", "yaw", "yaw_rate", "waypoints"});
    if (t.contains("type")) {
      const json& ty = t.at("type");
      if (!ty.is_string()) bad_field("trajectory.type", "expected a string");
      const std::string s = ty.get<std::string>();
      if (s == "constant_velocity")
        c.trajectory.type = TrajectoryConfig::Type::kConstantVelocity;
      else if (s == "waypoints")
        c.trajectory.type = TrajectoryConfig::Type::kWaypoints;
      else
        bad_field("trajectory.type", "must be 'constant_velocity' or 'waypoints'");
    }
    c.trajectory.start = get_vec3(t, "start", c.trajectory.start, "trajectory.");
    c.trajectory.velocity = get_vec3(t, "velocity", c.trajectory.velocity, "trajectory.");
    c.trajectory.yaw = get_num(t, "yaw", c.trajectory.yaw, "trajectory.");
    c.trajectory.yaw_rate = get_num(t, "yaw_rate", c.trajectory.yaw_rate, "trajectory.");
    if (t.contains("waypoints")) {
      const json& ws = t.at("waypoints");
      if (!ws.is_array()) bad_field("trajectory.waypoints", "expected an array");
      for (const json& w : ws) {
        expect_object(w, "trajectory.waypoints[]");
        check_known(w, "trajectory.waypoints[]", {"time", "position", "yaw"});
        Waypoint wp;
        wp.time = get_num(w, "time", 0.0, "trajectory.waypoints[].");
        wp.position =
            get_vec3(w, "position", Eigen::Vector3d::Zero(), "trajectory.waypoints[].");
        wp.yaw = get_num(w, "yaw", 0.0, "trajectory.waypoints[].");
        c.trajectory.waypoints.push_back(wp);
      }
    }
  }

  if (j.contains("camera")) {
    const json& cam = expect_object(j.at("camera"), "camera");
    check_known(cam, "camera",
                {"fx", "fy", "cx", "cy", "image_width", "image_height", "pixel_noise_sigma"});
    c.intrinsics.fx = get_num(cam, "fx", c.intrinsics.fx, "camera.");
    c.intrinsics.fy = get_num(cam, "fy", c.intrinsics.fy, "camera.");
    c.intrinsics.cx = get_num(cam, "cx", c.intrinsics.cx, "camera.");
    c.intrinsics.cy = get_num(cam, "cy", c.intrinsics.cy, "camera.");
    c.image_width = get_int(cam, "image_width", c.image_width, "camera.");
    c.image_height = get_int(cam, "image_height", c.image_height, "camera.");
    c.pixel_noise_sigma = get_num(cam, "pixel_noise_sigma", c.pixel_noise_sigma, "camera.");
  }

  if (j.contains("background")) {
    const json& b = expect_object(j.at("background"), "background");
    check_known(b, "background", {"point_count", "lo", "hi", "feature_count"});
    c.background.point_count = get_int(b, "point_count", c.background.point_count, "background.");
    c.background.lo = get_vec3(b, "lo", c.background.lo, "background.");
    c.background.hi = get_vec3(b, "hi", c.background.hi, "background.");
    c.background.feature_count =
        get_int(b, "feature_count", c.background.feature_count, "background.");
  }

  if (j.contains("objects")) {
    const json& objs = j.at("objects");
    if (!objs.is_array()) bad_field("objects", "expected an array");
    for (const json& o : objs) {
      expect_object(o, "objects[]");
      check_known(o, "objects[]",
                  {"shape", "extent", "radius", "center", "velocity", "point_count",
                   "feature_count", "radar_dropout"});
      ObjectConfig obj;
      if (o.contains("shape")) {
        const json& sh = o.at("shape");
        if (!sh.is_string()) bad_field("objects[].shape", "expected a string");
        const std::string s = sh.get<std::string>();
        if (s == "box")
          obj.shape = ObjectConfig::Shape::kBox;
        else if (s == "sphere")
          obj.shape = ObjectConfig::Shape::kSphere;
        else
          bad_field("objects[].shape", "must be 'box' or 'sphere'");
      }
      obj.extent = get_vec3(o, "extent", obj.extent, "objects[].");
      obj.radius = get_num(o, "radius", obj.radius, "objects[].");
      obj.center = get_vec3(o, "center", obj.center, "objects[].");
      obj.velocity = get_vec3(o, "velocity", obj.velocity, "objects[].");
      obj.point_count = get_int(o, "point_count", obj.point_count, "objects[].");
      obj.feature_count = get_int(o, "feature_count", obj.feature_count, "objects[].");
      obj.radar_dropout = get_num(o, "radar_dropout", obj.radar_dropout, "objects[].");
      c.objects.push_back(obj);
    }
  }

  if (j.contains("reflectors")) {
    const json& refs = j.at("reflectors");
    if (!refs.is_array()) bad_field("reflectors", "expected an array");
    for (const json& r : refs) {
      expect_object(r, "reflectors[]");
      check_known(r, "reflectors[]", {"normal", "offset"});
      ReflectorPlane plane;
      plane.normal = get_vec3(r, "normal", plane.normal, "reflectors[].");
      plane.offset = get_num(r, "offset", plane.offset, "reflectors[].");
      c.reflectors.push_back(plane);
    }
  }

  if (j.contains("radar")) {
    const json& r = expect_object(j.at("radar"), "radar");
    check_known(r, "radar",
                {"point_noise_sigma", "spurious_fraction", "persistence",
                 "min_mirror_clearance", "rdm"});
    c.radar.point_noise_sigma =
        get_num(r, "point_noise_sigma", c.radar.point_noise_sigma, "radar.");
    c.radar.spurious_fraction =
        get_num(r, "spurious_fraction", c.radar.spurious_fraction, "radar.");
    c.radar.persistence = get_num(r, "persistence", c.radar.persistence, "radar.");
    c.radar.min_mirror_clearance =
        get_num(r, "min_mirror_clearance", c.radar.min_mirror_clearance, "radar.");
    if (r.contains("rdm")) {
      const json& m = expect_object(r.at("rdm"), "radar.rdm");
      check_known(m, "radar.rdm",
                  {"enabled", "range_bins", "doppler_bins", "range_res", "doppler_res",
                   "noise_power", "target_snr_db"});
      c.radar.rdm.enabled = get_bool(m, "enabled", c.radar.rdm.enabled, "radar.rdm.");
      c.radar.rdm.range_bins = get_int(m, "range_bins", c.radar.rdm.range_bins, "radar.rdm.");
      c.radar.rdm.doppler_bins =
          get_int(m, "doppler_bins", c.radar.rdm.doppler_bins, "radar.rdm.");
      c.radar.rdm.range_res = get_num(m, "range_res", c.radar.rdm.range_res, "radar.rdm.");
      c.radar.rdm.doppler_res =
          get_num(m, "doppler_res", c.radar.rdm.doppler_res, "radar.rdm.");
      c.radar.rdm.noise_power =
          get_num(m, "noise_power", c.radar.rdm.noise_power, "radar.rdm.");
      c.radar.rdm.target_snr_db =
          get_num(m, "target_snr_db", c.radar.rdm.target_snr_db, "radar.rdm.");
    }
  }

  if (j.contains("flow")) {
    const json& f = expect_object(j.at("flow"), "flow");
    check_known(f, "flow", {"noise_sigma", "label_flip_prob"});
    c.flow.noise_sigma = get_num(f, "noise_sigma", c.flow.noise_sigma, "flow.");
    c.flow.label_flip_prob = get_num(f, "label_flip_prob", c.flow.label_flip_prob, "flow.");
  }

  if (j.contains("poses")) {
    const json& p = expect_object(j.at("poses"), "poses");
    check_known(p, "poses",
                {"vi_noise_sigma", "inertial_rate", "drift_rate", "drift_direction"});
    c.poses.vi_noise_sigma = get_num(p, "vi_noise_sigma", c.poses.vi_noise_sigma, "poses.");
    c.poses.inertial_rate = get_num(p, "inertial_rate", c.poses.inertial_rate, "poses.");
    c.poses.drift_rate = get_num(p, "drift_rate", c.poses.drift_rate, "poses.");
    c.poses.drift_direction =
        get_vec3(p, "drift_direction", c.poses.drift_direction, "poses.");
  }

  c.validate();
  return c;
}

json SceneConfig::to_json() const {
  json t;
  t["type"] = trajectory.type == TrajectoryConfig::Type::kConstantVelocity
                  ? "constant_velocity"
                  : "waypoints";
  t["start"] = vec3_json(trajectory.start);
  t["velocity"] = vec3_json(trajectory.velocity);
  t["yaw"] = trajectory.yaw;
  t["yaw_rate"] = trajectory.yaw_rate;
  t["waypoints"] = json::array();
  for (const Waypoint& w : trajectory.waypoints)
    t["waypoints"].push_back(
        {{"time", w.time}, {"position", vec3_json(w.position)}, {"yaw", w.yaw}});

  json objs = json::array();
  for (const ObjectConfig& o : objects)
    objs.push_back({{"shape", o.shape == ObjectConfig::Shape::kBox ? "box" : "sphere"},
                    {"extent", vec3_json(o.extent)},
                    {"radius", o.radius},
                    {"center", vec3_json(o.center)},
                    {"velocity", vec3_json(o.velocity)},
                    {"point_count", o.point_count},
                    {"feature_count", o.feature_count},
                    {"radar_dropout", o.radar_dropout}});

  json refs = json::array();
  for (const ReflectorPlane& r : reflectors)
    refs.push_back({{"normal", vec3_json(r.normal)}, {"offset", r.offset}});

  return {
      {"seed", seed},
      {"duration", duration},
      {"frame_rate", frame_rate},
      {"trajectory", t},
      {"camera",
       {{"fx", intrinsics.fx},
        {"fy", intrinsics.fy},
        {"cx", intrinsics.cx},
        {"cy", intrinsics.cy},
        {"image_width", image_width},
        {"image_height", image_height},
        {"pixel_noise_sigma", pixel_noise_sigma}}},
      {"background",
       {{"point_count", background.point_count},
        {"lo", vec3_json(background.lo)},
        {"hi", vec3_json(background.hi)},
        {"feature_count", background.feature_count}}},
      {"objects", objs},
      {"reflectors", refs},
      {"radar",
       {{"point_noise_sigma", radar.point_noise_sigma},
        {"spurious_fraction", radar.spurious_fraction},
        {"persistence", radar.persistence},
        {"min_mirror_clearance", radar.min_mirror_clearance},
        {"rdm",
         {{"enabled", radar.rdm.enabled},
          {"range_bins", radar.rdm.range_bins},
          {"doppler_bins", radar.rdm.doppler_bins},
          {"range_res", radar.rdm.range_res},
          {"doppler_res", radar.rdm.doppler_res},
          {"noise_power", radar.rdm.noise_power},
          {"target_snr_db", radar.rdm.target_snr_db}}}}},
      {"flow", {{"noise_sigma", flow.noise_sigma}, {"label_flip_prob", flow.label_flip_prob}}},
      {"poses",
       {{"vi_noise_sigma", poses.vi_noise_sigma},
        {"inertial_rate", poses.inertial_rate},
        {"drift_rate", poses.drift_rate},
        {"drift_direction", vec3_json(poses.drift_direction)}}},
  };
}

// ---------------------------------------------------------------------------
// Scene directory layout.

json export_scene(const SceneData& data, const fs::path& dir) {
  fs::create_directories(dir);
  const int n_frames = static_cast<int>(data.frames.size());

  json frames_index = json::array();
  for (const ObservedFrame& frame : data.frames) {
    const std::string name = numbered("cloud", frame.index, "csv");
    io::write_cloud_csv(dir / "clouds" / name, frame.cloud);
    frames_index.push_back(
        {{"file", name}, {"frame", frame.index}, {"timestamp", frame.timestamp}});
  }
  io::write_text_file(dir / "clouds" / "frames.json",
                      json{{"frames", frames_index}}.dump(2) + "\n");

  for (const FramePair& pair : data.pairs) {
    std::string tracks = "object_id,prev_u,prev_v,curr_u,curr_v\n";
    for (const FeatureTrack& tr : pair.tracks) {
      tracks += std::to_string(tr.object_id);
      for (double v : {tr.prev_pixel.u, tr.prev_pixel.v, tr.curr_pixel.u, tr.curr_pixel.v})
        tracks += "," + io::format_double(v);
      tracks += "\n";
    }
    io::write_text_file(dir / "tracks" / numbered("tracks", pair.index, "csv"), tracks);

    std::string flow = "x,y,z,fx,fy,fz,moving_prob\n";
    for (std::size_t i = 0; i < pair.flow.points.size(); ++i) {
      const Eigen::Vector3d& p = pair.flow.points[i];
      const Eigen::Vector3d& f = pair.flow.flow[i];
      for (double v : {p.x(), p.y(), p.z(), f.x(), f.y(), f.z()})
        flow += io::format_double(v) + ",";
      flow += io::format_double(pair.flow.moving_prob[i]) + "\n";
    }
    io::write_text_file(dir / "tracks" / numbered("flow", pair.index, "csv"), flow);
  }

  io::write_pose_csv(dir / "poses" / "truth.csv", data.truth.sensor_poses);
  io::write_pose_csv(dir / "poses" / "vi.csv", data.vi_poses);
  io::write_pose_csv(dir / "poses" / "inertial.csv", data.inertial_poses);

  json rdm_index = json::array();
  for (const ObservedFrame& frame : data.frames) {
    if (!frame.rdm) continue;
    const std::string name = numbered("rdm", frame.index, "bin");
    io::write_rdm_binary(dir / "rdm" / name, *frame.rdm);
    rdm_index.push_back(io::rdm_manifest_entry(*frame.rdm, name, frame.index, frame.timestamp));
  }
  if (!rdm_index.empty())
    io::write_text_file(dir / "rdm" / "manifest.json",
                        json{{"frames", rdm_index}}.dump(2) + "\n");

  for (int k = 0; k < n_frames; ++k) {
    PointCloudFrame clean;
    clean.timestamp = data.frames[k].timestamp;
    clean.points = data.truth.clean_points[k];
    clean.labels = data.truth.clean_labels[k];
    io::write_cloud_csv(dir / "truth" / numbered("clean", k, "csv"), clean);

    std::string prov = "mirror,source,reflector\n";
    for (std::size_t i = 0; i < data.truth.mirror_flags[k].size(); ++i)
      prov += std::to_string(static_cast<int>(data.truth.mirror_flags[k][i])) + "," +
              std::to_string(data.truth.mirror_source[k][i]) + "," +
              std::to_string(data.truth.mirror_reflector[k][i]) + "\n";
    io::write_text_file(dir / "truth" / numbered("provenance", k, "csv"), prov);
  }

  json pairs = json::array();
  for (const PairTruth& pt : data.truth.pairs) {
    json objs = json::array();
    for (const ObjectTruth& ot : pt.objects) {
      json positions = json::array();
      for (const Eigen::Vector3d& p : ot.positions) positions.push_back(vec3_json(p));
      objs.push_back({{"id", ot.object_id},
                      {"delta", vec3_json(ot.delta_d)},
                      {"rows", ot.track_rows},
                      {"positions", positions}});
    }
    pairs.push_back({{"index", pt.index},
                     {"camera_transform", transform_json(pt.camera_transform)},
                     {"objects", objs}});
  }
  io::write_text_file(dir / "truth" / "objects.json", json{{"pairs", pairs}}.dump(2) + "\n");

  json timestamps = json::array();
  for (const ObservedFrame& frame : data.frames) timestamps.push_back(frame.timestamp);
  io::write_text_file(dir / "truth" / "scene.json",
                      json{{"config", data.config.to_json()},
                           {"frame_count", n_frames},
                           {"timestamps", timestamps}}
                              .dump(2) +
                          "\n");

  json manifest = {{"format", "radarvi-scene"},
                   {"version", 1},
                   {"seed", data.config.seed},
                   {"frame_count", n_frames},
                   {"files", io::directory_manifest(dir)}};
  io::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

SceneData load_scene(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json"))
    throw MissingInput("scene manifest not found: " + (dir / "manifest.json").string());

  SceneData data;
  const json scene_json = io::load_json_file(dir / "truth" / "scene.json");
  data.config = SceneConfig::from_json(scene_json.at("config"));

  const json frames_index = io::load_json_file(dir / "clouds" / "frames.json");
  for (const json& entry : frames_index.at("frames")) {
    ObservedFrame frame;
    frame.index = entry.at("frame").get<int>();
    frame.timestamp = entry.at("timestamp").get<double>();
    frame.cloud = io::read_cloud_csv(dir / "clouds" / entry.at("file").get<std::string>());
    data.frames.push_back(std::move(frame));
  }
  const int n_frames = static_cast<int>(data.frames.size());

  for (int k = 1; k < n_frames; ++k) {
    FramePair pair;
    pair.index = k;
    const fs::path tracks_path = dir / "tracks" / numbered("tracks", k, "csv");
    int line_no = 1;
    for (const std::string& line :
         io::read_csv_lines(tracks_path, "object_id,prev_u,prev_v,curr_u,curr_v")) {
      ++line_no;
      const auto f = io::split(line, ',');
      if (f.size() != 5)
        throw IoFailure("expected 5 fields in " + tracks_path.string() + ":" +
                        std::to_string(line_no));
      FeatureTrack tr;
      tr.object_id = static_cast<int>(io::parse_double(f[0], tracks_path, line_no));
      tr.prev_pixel = {io::parse_double(f[1], tracks_path, line_no),
                       io::parse_double(f[2], tracks_path, line_no)};
      tr.curr_pixel = {io::parse_double(f[3], tracks_path, line_no),
                       io::parse_double(f[4], tracks_path, line_no)};
      pair.tracks.push_back(tr);
    }

    const fs::path flow_path = dir / "tracks" / numbered("flow", k, "csv");
    line_no = 1;
    for (const std::string& line :
         io::read_csv_lines(flow_path, "x,y,z,fx,fy,fz,moving_prob")) {
      ++line_no;
      const auto f = io::split(line, ',');
      if (f.size() != 7)
        throw IoFailure("expected 7 fields in " + flow_path.string() + ":" +
                        std::to_string(line_no));
      double v[7];
      for (int i = 0; i < 7; ++i) v[i] = io::parse_double(f[i], flow_path, line_no);
      pair.flow.points.emplace_back(v[0], v[1], v[2]);
      pair.flow.flow.emplace_back(v[3], v[4], v[5]);
      pair.flow.moving_prob.push_back(v[6]);
    }
    data.pairs.push_back(std::move(pair));
  }

  data.truth.sensor_poses = io::read_pose_csv(dir / "poses" / "truth.csv");
  data.vi_poses = io::read_pose_csv(dir / "poses" / "vi.csv");
  data.inertial_poses = io::read_pose_csv(dir / "poses" / "inertial.csv");

  if (fs::exists(dir / "rdm" / "manifest.json")) {
    const json rdm_index = io::load_json_file(dir / "rdm" / "manifest.json");
    for (const json& entry : rdm_index.at("frames")) {
      const int frame = entry.at("frame").get<int>();
      if (frame < 0 || frame >= n_frames)
        throw IoFailure("RDM manifest frame index out of range: " + std::to_string(frame));
      data.frames[frame].rdm =
          io::read_rdm_binary(dir / "rdm" / entry.at("file").get<std::string>(), entry);
    }
  }

  for (int k = 0; k < n_frames; ++k) {
    const PointCloudFrame clean = io::read_cloud_csv(dir / "truth" / numbered("clean", k, "csv"));
    data.truth.clean_points.push_back(clean.points);
    data.truth.clean_labels.push_back(clean.labels);

    const fs::path prov_path = dir / "truth" / numbered("provenance", k, "csv");
    std::vector<std::uint8_t> flags;
    std::vector<int> sources;
    std::vector<int> reflectors;
    int line_no = 1;
    for (const std::string& line : io::read_csv_lines(prov_path, "mirror,source,reflector")) {
      ++line_no;
      const auto f = io::split(line, ',');
      if (f.size() != 3)
        throw IoFailure("expected 3 fields in " + prov_path.string() + ":" +
                        std::to_string(line_no));
      flags.push_back(io::parse_double(f[0], prov_path, line_no) != 0.0 ? 1 : 0);
      sources.push_back(static_cast<int>(io::parse_double(f[1], prov_path, line_no)));
      reflectors.push_back(static_cast<int>(io::parse_double(f[2], prov_path, line_no)));
    }
    data.truth.mirror_flags.push_back(std::move(flags));
    data.truth.mirror_source.push_back(std::move(sources));
    data.truth.mirror_reflector.push_back(std::move(reflectors));
  }

  const json objects_json = io::load_json_file(dir / "truth" / "objects.json");
  for (const json& pj : objects_json.at("pairs")) {
    PairTruth pt;
    pt.index = pj.at("index").get<int>();
    pt.camera_transform = transform_from_json(pj.at("camera_transform"), "camera_transform");
    for (const json& oj : pj.at("objects")) {
      ObjectTruth ot;
      ot.object_id = oj.at("id").get<int>();
      ot.delta_d = get_vec3(oj, "delta", Eigen::Vector3d::Zero(), "objects[].");
      ot.track_rows = oj.at("rows").get<std::vector<int>>();
      for (const json& p : oj.at("positions"))
        ot.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
      pt.objects.push_back(std::move(ot));
    }
    data.truth.pairs.push_back(std::move(pt));
  }

  return data;
}

}  // namespace radarvi::sim
