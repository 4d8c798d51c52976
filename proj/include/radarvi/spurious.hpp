#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "radarvi/types.hpp"

namespace radarvi {

// Input of the multi-frame spatial stability filter. frames[0] is the
// current frame; frames[i] (i >= 1) are progressively older.
// transforms[i-1] maps frame-i coordinates into frame-0 coordinates and
// delta_ts[i-1] is the (positive) time gap between frame i-1 and frame i.
// object_translations holds each dynamic object's displacement over the most
// recent frame gap, expressed in frame-0 coordinates.
struct StabilityContext {
  std::vector<PointCloudFrame> frames;
  std::vector<RigidTransform> transforms;
  std::vector<double> delta_ts;
  std::map<int, Eigen::Vector3d> object_translations;
  double d0 = 0.5;          // meters, minimum neighborhood range
  double percentile = 5.0;  // neighbor-count percentile below which to flag
  bool adaptive = true;     // false pins every range to d0 (baseline variant)

  void validate() const;
};

struct NeighborhoodRanges {
  double background = 0.0;            // also used for unknown labels
  std::map<int, double> per_object;   // dynamic object id -> range
};

struct SuperimposedPoint {
  Eigen::Vector3d position;  // frame-0 coordinates
  int frame_index = 0;       // provenance
  int point_index = 0;       // index within the source frame
  int label = kLabelUnknown;
};

// Radar velocity implied by a relative transform over a time gap:
// translation(T) / dt.
Eigen::Vector3d radar_velocity(const RigidTransform& T, double dt);

// Relative velocity of a dynamic point w.r.t. the radar:
// v_radar - delta_d / dt.
Eigen::Vector3d dynamic_point_velocity(const Eigen::Vector3d& delta_d, double dt,
                                       const Eigen::Vector3d& v_radar);

// Velocity-adaptive neighborhood ranges: max(d0, |mean velocity| * span / 2)
// per class, where the span is the sum of all frame gaps.
NeighborhoodRanges neighborhood_ranges(const StabilityContext& ctx);

// All frames mapped into frame-0 coordinates and concatenated, frame 0 first,
// with per-point provenance.
std::vector<SuperimposedPoint> superimpose(const StabilityContext& ctx);

// Neighbor count of each frame-0 point over the superimposed cloud within
// its class's range, excluding the point's own entry.
std::vector<int> neighbor_counts(const StabilityContext& ctx);

// Flags frame-0 points whose neighbor count falls strictly below the
// nearest-rank percentile of the frame-0 count distribution; returns frame 0
// with the spurious flags filled in.
PointCloudFrame mark_spurious(const StabilityContext& ctx);

}  // namespace radarvi
