#include "radarvi/cfar.hpp"

#include <algorithm>
#include <cmath>

namespace radarvi {
namespace {

void check_window(const RangeDopplerMatrix& rdm, int guard, int train) {
  if (guard < 0 || train < 1) throw InvalidConfig("need guard >= 0 and train >= 1");
  const int w = 2 * (guard + train) + 1;
  if (w > rdm.range_bins || w > rdm.doppler_bins)
    throw WindowTooLarge("CFAR window exceeds matrix extent");
}

void check_pfa(double pfa) {
  if (!(pfa > 0.0 && pfa < 1.0)) throw InvalidConfig("pfa must lie in (0, 1)");
}

int ring_cell_count(int guard, int train) {
  const int outer = 2 * (guard + train) + 1;
  const int inner = 2 * guard + 1;
  return outer * outer - inner * inner;
}

double snr_db_of(double power, double noise) {
  return 10.0 * std::log10(power / std::max(noise, 1e-300));
}

// Prefix-sum table for O(1) rectangle sums; entry (r, d) holds the sum over
// power[0..r) x [0..d).
std::vector<double> summed_area(const RangeDopplerMatrix& rdm) {
  const int nr = rdm.range_bins;
  const int nd = rdm.doppler_bins;
  std::vector<double> s(static_cast<std::size_t>(nr + 1) * (nd + 1), 0.0);
  const auto at = [&](int r, int d) -> double& {
    return s[static_cast<std::size_t>(r) * (nd + 1) + d];
  };
  for (int r = 0; r < nr; ++r)
    for (int d = 0; d < nd; ++d)
      at(r + 1, d + 1) = rdm.at(r, d) + at(r, d + 1) + at(r + 1, d) - at(r, d);
  return s;
}

template <typename NoiseFn>
std::vector<Detection> run_detector(const RangeDopplerMatrix& rdm, int guard, int train,
                                    double factor, NoiseFn&& noise_at) {
  rdm.validate();
  check_window(rdm, guard, train);
  const int w = guard + train;
  std::vector<Detection> dets;
  for (int r = w; r < rdm.range_bins - w; ++r) {
    for (int d = w; d < rdm.doppler_bins - w; ++d) {
      const double noise = noise_at(r, d);
      const double cut = rdm.at(r, d);
      if (cut > factor * noise)
        dets.push_back({r, d, snr_db_of(cut, noise), std::nullopt});
    }
  }
  return dets;
}

std::vector<Detection> run_ca(const RangeDopplerMatrix& rdm, int guard, int train, double factor) {
  rdm.validate();
  check_window(rdm, guard, train);
  const std::vector<double> sat = summed_area(rdm);
  const int nd = rdm.doppler_bins;
  const auto rect = [&](int r0, int d0, int r1, int d1) {  // half-open [r0,r1) x [d0,d1)
    const auto at = [&](int r, int d) {
      return sat[static_cast<std::size_t>(r) * (nd + 1) + d];
    };
    return at(r1, d1) - at(r0, d1) - at(r1, d0) + at(r0, d0);
  };
  const int n_train = ring_cell_count(guard, train);
  const int w = guard + train;
  return run_detector(rdm, guard, train, factor, [&](int r, int d) {
    const double outer = rect(r - w, d - w, r + w + 1, d + w + 1);
    const double inner = rect(r - guard, d - guard, r + guard + 1, d + guard + 1);
    return (outer - inner) / n_train;
  });
}

std::vector<double> gather_ring(const RangeDopplerMatrix& rdm, int r, int d, int guard,
                                int train) {
  const int w = guard + train;
  std::vector<double> ring;
  ring.reserve(ring_cell_count(guard, train));
  for (int i = r - w; i <= r + w; ++i)
    for (int j = d - w; j <= d + w; ++j)
      if (std::max(std::abs(i - r), std::abs(j - d)) > guard) ring.push_back(rdm.at(i, j));
  return ring;
}

std::vector<Detection> run_os(const RangeDopplerMatrix& rdm, int guard, int train, int k,
                              double factor) {
  rdm.validate();
  check_window(rdm, guard, train);
  const int n_train = ring_cell_count(guard, train);
  if (k < 1 || k > n_train) throw InvalidRank("OS rank must lie in [1, training-cell count]");
  return run_detector(rdm, guard, train, factor, [&](int r, int d) {
    std::vector<double> ring = gather_ring(rdm, r, d, guard, train);
    std::nth_element(ring.begin(), ring.begin() + (k - 1), ring.end());
    return ring[k - 1];
  });
}

}  // namespace

double ca_cfar_alpha(int n_train, double pfa) {
  check_pfa(pfa);
  if (n_train < 1) throw InvalidConfig("need at least one training cell");
  const double n = static_cast<double>(n_train);
  return n * (std::pow(pfa, -1.0 / n) - 1.0);
}

double os_cfar_alpha(int n_train, int k, double pfa) {
  check_pfa(pfa);
  if (k < 1 || k > n_train) throw InvalidRank("OS rank must lie in [1, training-cell count]");
  // pfa(alpha) = prod_{i=0}^{k-1} (N - i) / (N - i + alpha) falls from 1 to 0.
  const auto pfa_of = [&](double alpha) {
    double prod = 1.0;
    for (int i = 0; i < k; ++i) {
      const double m = static_cast<double>(n_train - i);
      prod *= m / (m + alpha);
    }
    return prod;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (pfa_of(hi) > pfa) hi *= 2.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (pfa_of(mid) > pfa)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<Detection> ca_cfar(const RangeDopplerMatrix& rdm, int guard, int train, double pfa) {
  if (guard < 0 || train < 1) throw InvalidConfig("need guard >= 0 and train >= 1");
  return run_ca(rdm, guard, train, ca_cfar_alpha(ring_cell_count(guard, train), pfa));
}

std::vector<Detection> ca_cfar_db(const RangeDopplerMatrix& rdm, int guard, int train,
                                  double offset_db) {
  return run_ca(rdm, guard, train, std::pow(10.0, offset_db / 10.0));
}

std::vector<Detection> os_cfar(const RangeDopplerMatrix& rdm, int guard, int train, int k,
                               double pfa) {
  if (guard < 0 || train < 1) throw InvalidConfig("need guard >= 0 and train >= 1");
  return run_os(rdm, guard, train, k, os_cfar_alpha(ring_cell_count(guard, train), k, pfa));
}

std::vector<Detection> os_cfar_db(const RangeDopplerMatrix& rdm, int guard, int train, int k,
                                  double offset_db) {
  return run_os(rdm, guard, train, k, std::pow(10.0, offset_db / 10.0));
}

std::vector<Eigen::Vector3d> detections_to_points(const std::vector<Detection>& dets,
                                                  const RangeDopplerMatrix& rdm) {
  if (!rdm.has_angle_map()) throw MissingAngleMap("RDM carries no angle planes");
  std::vector<Eigen::Vector3d> points;
  points.reserve(dets.size());
  for (const Detection& det : dets) {
    const std::size_t idx =
        static_cast<std::size_t>(det.range_bin) * rdm.doppler_bins + det.doppler_bin;
    const double az = rdm.azimuth[idx];
    const double el = rdm.elevation[idx];
    const double range = det.range_bin * rdm.range_res;
    points.emplace_back(range * std::cos(el) * std::sin(az), range * std::cos(el) * std::cos(az),
                        range * std::sin(el));
  }
  return points;
}

}  // namespace radarvi
