#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "radarvi/cfar.hpp"
#include "radarvi/types.hpp"

namespace radarvi::io {

using json = nlohmann::ordered_json;

// Shortest round-trippable decimal representation ("%.17g" trimmed by the
// printf shortest-g behavior).
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);   // MissingInput / IoFailure
void write_text_file(const std::filesystem::path& path, std::string_view content);  // IoFailure
std::vector<char> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t bytes);

std::string sha256_hex(const void* data, std::size_t bytes);
std::string sha256_file(const std::filesystem::path& path);

// Pose CSV: header + rows `timestamp,tx,ty,tz,qx,qy,qz,qw`, Hamilton
// quaternion, scalar last, canonicalized to qw >= 0.
void write_pose_csv(const std::filesystem::path& path, const PoseStream& stream);
PoseStream read_pose_csv(const std::filesystem::path& path);

// Cloud CSV: header + rows `x,y,z,label,spurious`.
void write_cloud_csv(const std::filesystem::path& path, const PointCloudFrame& frame);
PointCloudFrame read_cloud_csv(const std::filesystem::path& path);

// RDM binary: consecutive little-endian float32 planes (power, then azimuth
// and elevation when present), row-major. Shape and resolutions live in the
// sidecar manifest entry produced by rdm_manifest_entry; its "header" string
// is `RDM v1 R D range_res doppler_res`.
void write_rdm_binary(const std::filesystem::path& path, const RangeDopplerMatrix& rdm);
RangeDopplerMatrix read_rdm_binary(const std::filesystem::path& path, const json& manifest_entry);
json rdm_manifest_entry(const RangeDopplerMatrix& rdm, const std::string& file, int frame,
                        double timestamp);

// CSV plumbing shared by the scene and pipeline serializers.
std::vector<std::string> split(const std::string& line, char sep);
double parse_double(const std::string& s, const std::filesystem::path& path, int line_no);
// Reads non-empty lines after verifying the exact expected header.
std::vector<std::string> read_csv_lines(const std::filesystem::path& path,
                                        const std::string& header);

// Parses a JSON document, mapping parse failures to InvalidConfig with a
// byte-offset-anchored message.
json parse_json(const std::string& text, const std::string& origin);
json load_json_file(const std::filesystem::path& path);

// Directory manifest: sorted (path, bytes, sha256) records of every regular
// file below dir except manifest.json itself.
json directory_manifest(const std::filesystem::path& dir);

}  // namespace radarvi::io
