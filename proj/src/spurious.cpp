#include "radarvi/spurious.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "radarvi/errors.hpp"
#include "radarvi/grid_index.hpp"

namespace radarvi {
namespace {

// Time offset between frame i (i >= 1) and frame 0.
double span_to_frame(const std::vector<double>& delta_ts, std::size_t i) {
  double tau = 0.0;
  for (std::size_t k = 0; k < i; ++k) tau += delta_ts[k];
  return tau;
}

double range_for_label(const NeighborhoodRanges& ranges, int label) {
  if (label >= 1) {
    const auto it = ranges.per_object.find(label);
    if (it != ranges.per_object.end()) return it->second;
  }
  return ranges.background;
}

}  // namespace

void StabilityContext::validate() const {
  if (frames.size() < 2) throw InvalidConfig("stability context needs at least two frames");
  if (transforms.size() != frames.size() - 1 || delta_ts.size() != frames.size() - 1)
    throw InvalidConfig("stability context needs F-1 transforms and F-1 time gaps");
  for (double dt : delta_ts)
    if (!(dt > 0.0)) throw NonPositiveDt("frame time gaps must be positive");
  if (!(d0 > 0.0)) throw InvalidConfig("minimum neighborhood range must be positive");
  if (!(percentile >= 0.0 && percentile <= 100.0))
    throw InvalidConfig("percentile must lie in [0, 100]");
  for (const PointCloudFrame& f : frames) f.validate();
}

Eigen::Vector3d radar_velocity(const RigidTransform& T, double dt) {
  if (!(dt > 0.0)) throw NonPositiveDt("radar velocity needs dt > 0");
  return T.translation / dt;
}

Eigen::Vector3d dynamic_point_velocity(const Eigen::Vector3d& delta_d, double dt,
                                       const Eigen::Vector3d& v_radar) {
  if (!(dt > 0.0)) throw NonPositiveDt("point velocity needs dt > 0");
  return v_radar - delta_d / dt;
}

NeighborhoodRanges neighborhood_ranges(const StabilityContext& ctx) {
  ctx.validate();
  NeighborhoodRanges out;
  out.background = ctx.d0;
  for (const auto& [id, unused] : ctx.object_translations) out.per_object[id] = ctx.d0;
  if (!ctx.adaptive) return out;

  const double span = span_to_frame(ctx.delta_ts, ctx.delta_ts.size());

  // Per past frame: the radar's mean velocity over [t_i, t_0], in frame-0
  // coordinates. transforms[i-1] carries R_0^T (p_i - p_0), i.e. minus the
  // radar displacement, hence the sign flip.
  Eigen::Vector3d v_b_sum = Eigen::Vector3d::Zero();
  std::map<int, Eigen::Vector3d> v_d_sum;
  for (const auto& [id, unused] : ctx.object_translations) v_d_sum[id] = Eigen::Vector3d::Zero();
  const int n = static_cast<int>(ctx.transforms.size());
  for (int i = 1; i <= n; ++i) {
    const double tau = span_to_frame(ctx.delta_ts, i);
    const Eigen::Vector3d v_radar = -radar_velocity(ctx.transforms[i - 1], tau);
    v_b_sum += v_radar;
    // A dynamic point moves with its object; its velocity relative to the
    // radar is the radar velocity minus the object velocity.
    for (const auto& [id, delta] : ctx.object_translations)
      v_d_sum[id] += dynamic_point_velocity(delta, ctx.delta_ts[i - 1], v_radar);
  }

  const Eigen::Vector3d v_b = v_b_sum / n;
  out.background = std::max(ctx.d0, 0.5 * v_b.norm() * span);
  for (const auto& [id, sum] : v_d_sum) {
    const Eigen::Vector3d v_d = sum / n;
    out.per_object[id] = std::max(ctx.d0, 0.5 * v_d.norm() * span);
  }
  return out;
}

std::vector<SuperimposedPoint> superimpose(const StabilityContext& ctx) {
  ctx.validate();
  std::vector<SuperimposedPoint> out;
  std::size_t total = 0;
  for (const PointCloudFrame& f : ctx.frames) total += f.size();
  out.reserve(total);
  for (int i = 0; i < static_cast<int>(ctx.frames.size()); ++i) {
    const PointCloudFrame& f = ctx.frames[i];
    for (int k = 0; k < static_cast<int>(f.size()); ++k) {
      const Eigen::Vector3d p =
          i == 0 ? f.points[k] : ctx.transforms[i - 1].apply(f.points[k]);
      out.push_back({p, i, k, f.labels[k]});
    }
  }
  return out;
}

std::vector<int> neighbor_counts(const StabilityContext& ctx) {
  const NeighborhoodRanges ranges = neighborhood_ranges(ctx);
  const std::vector<SuperimposedPoint> stacked = superimpose(ctx);

  std::vector<Eigen::Vector3d> positions;
  positions.reserve(stacked.size());
  for (const SuperimposedPoint& p : stacked) positions.push_back(p.position);

  // One grid per distinct range, sized so a radius query touches at most the
  // 27 surrounding cells.
  std::set<double> distinct{ranges.background};
  for (const auto& [id, r] : ranges.per_object) distinct.insert(r);
  std::map<double, GridIndex> grids;
  for (double r : distinct) grids.emplace(r, GridIndex(positions, r));

  const PointCloudFrame& current = ctx.frames[0];
  std::vector<int> counts(current.size());
  for (std::size_t k = 0; k < current.size(); ++k) {
    const double r = range_for_label(ranges, current.labels[k]);
    // The query point's own stack entry always matches at distance zero;
    // coincident copies from other frames are genuine support and stay.
    counts[k] = grids.at(r).count_within(current.points[k], r) - 1;
  }
  return counts;
}

PointCloudFrame mark_spurious(const StabilityContext& ctx) {
  const std::vector<int> counts = neighbor_counts(ctx);
  PointCloudFrame out = ctx.frames[0];
  out.spurious.assign(out.size(), 0);
  if (counts.empty()) return out;

  // Nearest-rank percentile of the frame-0 count distribution.
  std::vector<int> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(ctx.percentile / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  const int threshold = sorted[rank - 1];

  for (std::size_t k = 0; k < n; ++k) out.spurious[k] = counts[k] < threshold ? 1 : 0;
  return out;
}

}  // namespace radarvi
