#include "radarvi/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "radarvi/errors.hpp"

namespace radarvi::io {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, int line_no) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    throw IoFailure("bad numeric field '" + s + "' in " + path.string() + ":" +
                    std::to_string(line_no));
  return v;
}

std::vector<std::string> read_csv_lines(const std::filesystem::path& path,
                                        const std::string& header) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty() || lines.front() != header)
    throw IoFailure("missing header '" + header + "' in " + path.string());
  lines.erase(lines.begin());
  return lines;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInput("missing file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoFailure("read failed: " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoFailure("write failed: " + path.string());
}

std::vector<char> read_binary_file(const std::filesystem::path& path) {
  const std::string s = read_text_file(path);
  return {s.begin(), s.end()};
}

void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t bytes) {
  write_text_file(path, std::string_view(static_cast<const char*>(data), bytes));
}

std::string sha256_hex(const void* data, std::size_t bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, bytes, digest, &len, EVP_sha256(), nullptr) != 1)
    throw IoFailure("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::vector<char> data = read_binary_file(path);
  return sha256_hex(data.data(), data.size());
}

void write_pose_csv(const std::filesystem::path& path, const PoseStream& stream) {
  std::string out = "timestamp,tx,ty,tz,qx,qy,qz,qw\n";
  for (const PoseSample& s : stream.samples) {
    Eigen::Quaterniond q = s.pose.quaternion().normalized();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    out += format_double(s.timestamp);
    for (double v : {s.pose.translation.x(), s.pose.translation.y(), s.pose.translation.z(),
                     q.x(), q.y(), q.z(), q.w()})
      out += "," + format_double(v);
    out += "\n";
  }
  write_text_file(path, out);
}

PoseStream read_pose_csv(const std::filesystem::path& path) {
  PoseStream stream;
  int line_no = 1;
  for (const std::string& line : read_csv_lines(path, "timestamp,tx,ty,tz,qx,qy,qz,qw")) {
    ++line_no;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 8)
      throw IoFailure("expected 8 fields in " + path.string() + ":" + std::to_string(line_no));
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = parse_double(f[i], path, line_no);
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);  // w, x, y, z
    stream.samples.push_back(
        {v[0], RigidTransform::from_quaternion(q, {v[1], v[2], v[3]})});
  }
  stream.validate();
  return stream;
}

void write_cloud_csv(const std::filesystem::path& path, const PointCloudFrame& frame) {
  frame.validate();
  std::string out = "x,y,z,label,spurious\n";
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const Eigen::Vector3d& p = frame.points[i];
    out += format_double(p.x()) + "," + format_double(p.y()) + "," + format_double(p.z());
    out += "," + std::to_string(frame.labels[i]);
    out += ",";
    out += frame.spurious.empty() ? '0' : char('0' + (frame.spurious[i] ? 1 : 0));
    out += "\n";
  }
  write_text_file(path, out);
}

PointCloudFrame read_cloud_csv(const std::filesystem::path& path) {
  PointCloudFrame frame;
  int line_no = 1;
  for (const std::string& line : read_csv_lines(path, "x,y,z,label,spurious")) {
    ++line_no;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 5)
      throw IoFailure("expected 5 fields in " + path.string() + ":" + std::to_string(line_no));
    frame.points.emplace_back(parse_double(f[0], path, line_no),
                              parse_double(f[1], path, line_no),
                              parse_double(f[2], path, line_no));
    frame.labels.push_back(static_cast<int>(parse_double(f[3], path, line_no)));
    frame.spurious.push_back(parse_double(f[4], path, line_no) != 0.0 ? 1 : 0);
  }
  return frame;
}

void write_rdm_binary(const std::filesystem::path& path, const RangeDopplerMatrix& rdm) {
  rdm.validate();
  std::vector<float> buf;
  const std::size_t n = rdm.power.size();
  buf.reserve(n * (rdm.has_angle_map() ? 3 : 1));
  for (double v : rdm.power) buf.push_back(static_cast<float>(v));
  if (rdm.has_angle_map()) {
    for (double v : rdm.azimuth) buf.push_back(static_cast<float>(v));
    for (double v : rdm.elevation) buf.push_back(static_cast<float>(v));
  }
  write_binary_file(path, buf.data(), buf.size() * sizeof(float));
}

json rdm_manifest_entry(const RangeDopplerMatrix& rdm, const std::string& file, int frame,
                        double timestamp) {
  json entry;
  entry["header"] = "RDM v1 " + std::to_string(rdm.range_bins) + " " +
                    std::to_string(rdm.doppler_bins) + " " + format_double(rdm.range_res) + " " +
                    format_double(rdm.doppler_res);
  entry["file"] = file;
  entry["frame"] = frame;
  entry["timestamp"] = timestamp;
  entry["planes"] = rdm.has_angle_map() ? json::array({"power", "azimuth", "elevation"})
                                        : json::array({"power"});
  return entry;
}

RangeDopplerMatrix read_rdm_binary(const std::filesystem::path& path,
                                   const json& manifest_entry) {
  RangeDopplerMatrix rdm;
  const std::string header = manifest_entry.at("header").get<std::string>();
  std::istringstream hs(header);
  std::string tag, version;
  hs >> tag >> version >> rdm.range_bins >> rdm.doppler_bins >> rdm.range_res >> rdm.doppler_res;
  if (!hs || tag != "RDM" || version != "v1")
    throw IoFailure("bad RDM header '" + header + "' for " + path.string());

  const std::vector<char> raw = read_binary_file(path);
  const std::size_t n = static_cast<std::size_t>(rdm.range_bins) * rdm.doppler_bins;
  const std::size_t planes = manifest_entry.at("planes").size();
  if (raw.size() != planes * n * sizeof(float))
    throw IoFailure("RDM payload size mismatch for " + path.string());

  std::vector<float> buf(planes * n);
  std::memcpy(buf.data(), raw.data(), raw.size());
  rdm.power.assign(buf.begin(), buf.begin() + n);
  if (planes == 3) {
    rdm.azimuth.assign(buf.begin() + n, buf.begin() + 2 * n);
    rdm.elevation.assign(buf.begin() + 2 * n, buf.end());
  }
  rdm.validate();
  return rdm;
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidConfig("JSON parse error in " + origin + ": " + e.what());
  }
}

json load_json_file(const std::filesystem::path& path) {
  return parse_json(read_text_file(path), path.string());
}

json directory_manifest(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw MissingInput("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      files.push_back(std::filesystem::relative(entry.path(), dir));
  std::sort(files.begin(), files.end());

  json out = json::array();
  for (const std::filesystem::path& rel : files) {
    json rec;
    rec["path"] = rel.generic_string();
    rec["bytes"] = std::filesystem::file_size(dir / rel);
    rec["sha256"] = sha256_file(dir / rel);
    out.push_back(rec);
  }
  return out;
}

}  // namespace radarvi::io
