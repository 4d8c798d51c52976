#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace radarvi {

// One splitmix64 step; used to derive independent per-stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random source. Raw mt19937_64 output is pinned by the
// standard, so it is identical on every platform; the distribution mappings
// are written out explicitly because std::*_distribution are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent substream generator for (seed, stream, index).
  static Rng derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(mix64(mix64(seed ^ (0x517cc1b727220a95ULL * (stream + 1))) + index));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_open() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  // Unbiased integer on [0, n), n > 0, by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller with the companion value cached, so draw order is reproducible.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform_open();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  double exponential(double mean) { return -mean * std::log(uniform_open()); }

  Eigen::Vector3d normal3(double sigma) {
    return {sigma * normal(), sigma * normal(), sigma * normal()};
  }

  Eigen::Vector3d uniform_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
    return {uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z())};
  }

  // Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double a = uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(a), r * std::sin(a), z};
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace radarvi
