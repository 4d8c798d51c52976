#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "radarvi/errors.hpp"

namespace radarvi {

// Range-Doppler matrix of linear (non-negative) power values, row-major over
// range rows and Doppler columns, with optional per-cell angle planes for 3D
// back-projection.
struct RangeDopplerMatrix {
  int range_bins = 0;
  int doppler_bins = 0;
  double range_res = 1.0;    // meters per range bin
  double doppler_res = 1.0;  // m/s per Doppler bin
  std::vector<double> power;
  std::vector<double> azimuth;    // radians, empty when absent
  std::vector<double> elevation;  // radians, empty when absent

  bool has_angle_map() const { return !azimuth.empty() && !elevation.empty(); }

  double& at(int r, int d) { return power[static_cast<std::size_t>(r) * doppler_bins + d]; }
  double at(int r, int d) const { return power[static_cast<std::size_t>(r) * doppler_bins + d]; }

  void validate() const {
    if (range_bins < 8 || doppler_bins < 8)
      throw InvalidConfig("range-Doppler matrix needs at least 8x8 bins");
    if (!(range_res > 0.0) || !(doppler_res > 0.0))
      throw InvalidConfig("bin resolutions must be positive");
    const std::size_t n = static_cast<std::size_t>(range_bins) * doppler_bins;
    if (power.size() != n) throw InvalidConfig("power plane size mismatch");
    if ((!azimuth.empty() && azimuth.size() != n) ||
        (!elevation.empty() && elevation.size() != n))
      throw InvalidConfig("angle plane size mismatch");
    for (double p : power)
      if (!(p >= 0.0)) throw InvalidConfig("power values must be non-negative");
  }
};

struct Detection {
  int range_bin = 0;
  int doppler_bin = 0;
  double snr_db = 0.0;
  std::optional<Eigen::Vector3d> position;
};

// Threshold factor for cell-averaging CFAR on exponential noise:
// alpha = N_t (pfa^(-1/N_t) - 1).
double ca_cfar_alpha(int n_train, double pfa);

// Threshold factor for order-statistic CFAR: solves
// prod_{i=0}^{k-1} (N_t - i) / (N_t - i + alpha) = pfa by bisection to 1e-9.
double os_cfar_alpha(int n_train, int k, double pfa);

// Cell-averaging CFAR with a square training ring (train cells per side)
// around a square guard ring (guard cells per side). Cells whose window does
// not fit inside the matrix are not tested.
std::vector<Detection> ca_cfar(const RangeDopplerMatrix& rdm, int guard, int train, double pfa);

// Cell-averaging variant with a fixed threshold offset in dB instead of a
// pfa-derived factor.
std::vector<Detection> ca_cfar_db(const RangeDopplerMatrix& rdm, int guard, int train,
                                  double offset_db);

// Order-statistic CFAR: the noise estimate is the k-th smallest training-ring
// sample (1-based rank).
std::vector<Detection> os_cfar(const RangeDopplerMatrix& rdm, int guard, int train, int k,
                               double pfa);

std::vector<Detection> os_cfar_db(const RangeDopplerMatrix& rdm, int guard, int train, int k,
                                  double offset_db);

// Back-projects detections through the angle map:
// position = range * (cosEl sinAz, cosEl cosAz, sinEl), range = bin * res.
std::vector<Eigen::Vector3d> detections_to_points(const std::vector<Detection>& dets,
                                                  const RangeDopplerMatrix& rdm);

}  // namespace radarvi
