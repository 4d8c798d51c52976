#include "radarvi/reconstruction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "radarvi/errors.hpp"
#include "radarvi/geometry.hpp"

namespace radarvi {
namespace {

constexpr double kMaxLambda = 1e12;
constexpr double kMinLambda = 1e-15;

Eigen::VectorXd row_weights(int n_tracks, const SolverOptions& opts) {
  Eigen::VectorXd w(6 * n_tracks);
  const double cw = 1.0 / (opts.scene_depth_prior * opts.scene_depth_prior);
  const double rw = 1.0 / opts.reprojection_scale;
  for (int i = 0; i < n_tracks; ++i) {
    w.segment<6>(6 * i) << cw, cw, rw, rw, rw, rw;
  }
  return w;
}

DynamicFeatureState state_of(const Eigen::VectorXd& x, int i) {
  const int n = (static_cast<int>(x.size()) - 3) / 3;
  DynamicFeatureState s;
  s.position = x.segment<3>(3 * i);
  s.translation = x.segment<3>(3 * n);
  return s;
}

Vector6d feature_residual(const ReconstructionProblem& problem, const Eigen::VectorXd& x, int i) {
  return track_residual(problem.intrinsics, problem.camera_pose, state_of(x, i),
                        problem.tracks[i]);
}

struct Attempt {
  Eigen::VectorXd x;
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  SolveStatus status = SolveStatus::kFailed;
  std::vector<double> cost_history;
};

// Ranks attempts: smaller is better.
bool better(const Attempt& a, const Attempt& b) {
  const bool ac = a.status == SolveStatus::kConverged;
  const bool bc = b.status == SolveStatus::kConverged;
  if (ac != bc) return ac;
  return a.cost < b.cost;
}

class Objective {
 public:
  Objective(const ReconstructionProblem& problem, const SolverOptions& opts)
      : problem_(problem), weights_(row_weights(static_cast<int>(problem.tracks.size()), opts)) {}

  // Weighted residual; nullopt when the state is infeasible (a depth crossed
  // the cheirality guard).
  std::optional<Eigen::VectorXd> residual(const Eigen::VectorXd& x) const {
    const int n = static_cast<int>(problem_.tracks.size());
    Eigen::VectorXd r(6 * n);
    try {
      for (int i = 0; i < n; ++i) r.segment<6>(6 * i) = feature_residual(problem_, x, i);
    } catch (const NonPositiveDepth&) {
      return std::nullopt;
    }
    return weights_.cwiseProduct(r);
  }

  std::optional<Eigen::MatrixXd> jacobian(const Eigen::VectorXd& x) const {
    try {
      Eigen::MatrixXd j = residual_jacobian(problem_, x);
      j.array().colwise() *= weights_.array();
      return j;
    } catch (const NonPositiveDepth&) {
      return std::nullopt;
    }
  }

 private:
  const ReconstructionProblem& problem_;
  Eigen::VectorXd weights_;
};

Attempt run_descent(const Objective& objective, Eigen::VectorXd x, const SolverOptions& opts) {
  Attempt out;
  out.x = x;
  const auto r0 = objective.residual(x);
  if (!r0) return out;  // infeasible start
  Eigen::VectorXd r = *r0;
  double cost = 0.5 * r.squaredNorm();
  out.cost_history.push_back(cost);
  out.status = SolveStatus::kMaxIterations;

  double lambda = opts.initial_lambda;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    out.iterations = it;
    const auto jopt = objective.jacobian(x);
    if (!jopt) break;
    const Eigen::MatrixXd& j = *jopt;
    const Eigen::VectorXd g = j.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) {
      out.status = SolveStatus::kConverged;
      break;
    }
    const Eigen::MatrixXd a = j.transpose() * j;
    const Eigen::VectorXd d = a.diagonal().cwiseMax(1e-12);

    bool accepted = false;
    while (lambda <= kMaxLambda) {
      Eigen::MatrixXd m = a;
      m.diagonal() += lambda * d;
      const Eigen::VectorXd dx = m.ldlt().solve(-g);
      const Eigen::VectorXd x_try = x + dx;
      const auto r_try = objective.residual(x_try);
      if (r_try) {
        const double cost_try = 0.5 * r_try->squaredNorm();
        if (cost_try <= cost) {
          const double rel = (cost - cost_try) / std::max(cost, 1e-300);
          x = x_try;
          r = *r_try;
          cost = cost_try;
          out.cost_history.push_back(cost);
          lambda = std::max(lambda / opts.lambda_down, kMinLambda);
          accepted = true;
          if (rel < opts.cost_tolerance) out.status = SolveStatus::kConverged;
          break;
        }
      }
      lambda *= opts.lambda_up;
    }
    if (!accepted || out.status == SolveStatus::kConverged) break;
  }
  out.x = x;
  out.cost = cost;
  return out;
}

}  // namespace

void ReconstructionProblem::validate() const {
  // 6N residual rows must reach the 3N + 3 unknowns, which needs N >= 2.
  if (tracks.size() < 2)
    throw UnderdeterminedObject("reconstruction needs at least two tracks per object");
  intrinsics.validate();
  for (const FeatureTrack& t : tracks)
    if (t.object_id != tracks.front().object_id)
      throw InvalidConfig("all tracks of a reconstruction problem must share one object id");
}

Eigen::Vector3d triangulate_midpoint(const FeatureTrack& track, const CameraIntrinsics& K,
                                     const RigidTransform& T) {
  // Previous-frame ray through the origin; current-frame ray mapped back into
  // the previous frame, where the current camera center sits at -R^T t.
  const Eigen::Vector3d d1 = normalized_pixel(K, track.prev_pixel).normalized();
  const Eigen::Vector3d o2 = -(T.rotation.transpose() * T.translation);
  const Eigen::Vector3d d2 =
      (T.rotation.transpose() * normalized_pixel(K, track.curr_pixel)).normalized();

  const double cross = d1.cross(d2).norm();
  const double angle = std::atan2(cross, d1.dot(d2));
  if (!(angle > 1e-6)) throw DegenerateRays("observation rays are parallel");

  // Closest points of the two lines o1 + s d1 and o2 + u d2 with o1 = 0.
  const double b = d1.dot(d2);
  const double denom = 1.0 - b * b;
  const Eigen::Vector3d w = -o2;  // o1 - o2
  const double s = (b * d2.dot(w) - d1.dot(w)) / denom;
  const double u = (d2.dot(w) - b * d1.dot(w)) / denom;
  const Eigen::Vector3d mid = 0.5 * ((s * d1) + (o2 + u * d2));

  if (!(mid.z() > kMinDepth) || !(T.apply(mid).z() > kMinDepth))
    throw NonPositiveDepth("triangulated point falls behind a camera");
  return mid;
}

Eigen::VectorXd stack_state(const std::vector<Eigen::Vector3d>& positions,
                            const Eigen::Vector3d& translation) {
  Eigen::VectorXd x(3 * positions.size() + 3);
  for (std::size_t i = 0; i < positions.size(); ++i) x.segment<3>(3 * i) = positions[i];
  x.tail<3>() = translation;
  return x;
}

Eigen::VectorXd stacked_residual(const ReconstructionProblem& problem, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(problem.tracks.size());
  Eigen::VectorXd r(6 * n);
  for (int i = 0; i < n; ++i) r.segment<6>(6 * i) = feature_residual(problem, x, i);
  return r;
}

Eigen::MatrixXd residual_jacobian(const ReconstructionProblem& problem, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(problem.tracks.size());
  const int cols = 3 * n + 3;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6 * n, cols);
  Eigen::VectorXd xp = x;

  const auto step = [](double v) { return std::max(1e-6, 1e-6 * std::abs(v)); };

  // Position columns touch only the owning feature's six rows; the remaining
  // entries stay exactly zero.
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      const int c = 3 * i + k;
      const double h = step(x(c));
      xp(c) = x(c) + h;
      const Vector6d rp = feature_residual(problem, xp, i);
      xp(c) = x(c) - h;
      const Vector6d rm = feature_residual(problem, xp, i);
      xp(c) = x(c);
      j.block<6, 1>(6 * i, c) = (rp - rm) / (2.0 * h);
    }
  }
  // Shared translation columns touch every row.
  for (int k = 0; k < 3; ++k) {
    const int c = 3 * n + k;
    const double h = step(x(c));
    xp(c) = x(c) + h;
    const Eigen::VectorXd rp = stacked_residual(problem, xp);
    xp(c) = x(c) - h;
    const Eigen::VectorXd rm = stacked_residual(problem, xp);
    xp(c) = x(c);
    j.col(c) = (rp - rm) / (2.0 * h);
  }
  return j;
}

ReconstructionSolution solve_reconstruction(const ReconstructionProblem& problem,
                                            const SolverOptions& opts) {
  problem.validate();
  const int n = static_cast<int>(problem.tracks.size());
  const Objective objective(problem, opts);

  // Static-world initialization: midpoint triangulation per track, zero
  // object translation. Parallel-ray tracks fall back to the depth prior
  // along the previous-frame observation ray.
  std::vector<Eigen::Vector3d> p0(n);
  for (int i = 0; i < n; ++i) {
    try {
      p0[i] = triangulate_midpoint(problem.tracks[i], problem.intrinsics, problem.camera_pose);
    } catch (const Error&) {
      p0[i] = normalized_pixel(problem.intrinsics, problem.tracks[i].prev_pixel) *
              opts.scene_depth_prior;
    }
  }

  Attempt best = run_descent(objective, stack_state(p0, Eigen::Vector3d::Zero()), opts);

  if (!(best.status == SolveStatus::kConverged && best.cost <= opts.restart_cost_threshold)) {
    // The static initialization can sit in the wrong basin for fast objects;
    // retry with the translation nudged along the camera motion direction.
    const Eigen::Vector3d center = -(problem.camera_pose.rotation.transpose() *
                                     problem.camera_pose.translation);
    const Eigen::Vector3d dir =
        center.norm() > 1e-12 ? Eigen::Vector3d(center.normalized()) : Eigen::Vector3d::UnitZ();
    const double s = opts.restart_step;
    const std::array<Eigen::Vector3d, 3> nudges = {s * dir, -s * dir, 2.0 * s * dir};
    for (int k = 0; k < std::min<int>(opts.max_restarts, nudges.size()); ++k) {
      Attempt att = run_descent(objective, stack_state(p0, nudges[k]), opts);
      if (better(att, best)) best = std::move(att);
      if (best.status == SolveStatus::kConverged && best.cost <= opts.restart_cost_threshold)
        break;
    }
  }

  ReconstructionSolution sol;
  sol.iterations = best.iterations;
  sol.final_cost = best.cost;
  sol.status = best.status;
  sol.cost_history = std::move(best.cost_history);

  if (best.status == SolveStatus::kFailed) {
    sol.positions.assign(n, Eigen::Vector3d::Zero());
    return sol;
  }

  // A near-zero singular value of the final Jacobian means the data does not
  // pin the solution down (e.g. too few features for a moving object); such
  // results must never be reported as converged.
  if (const auto j = objective.jacobian(best.x)) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(*j);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(sv.size() - 1) < opts.degenerate_singular_ratio * sv(0))
      sol.status = SolveStatus::kDegenerate;
  } else {
    sol.status = SolveStatus::kFailed;
  }

  sol.positions.resize(n);
  for (int i = 0; i < n; ++i) sol.positions[i] = best.x.segment<3>(3 * i);
  sol.translation = best.x.tail<3>();
  sol.converged = sol.status == SolveStatus::kConverged;

  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d& p = sol.positions[i];
    const Eigen::Vector3d q = p + sol.translation;
    if (!(p.z() > kMinDepth) || !(q.z() > kMinDepth) ||
        !(problem.camera_pose.apply(p).z() > kMinDepth) ||
        !(problem.camera_pose.apply(q).z() > kMinDepth))
      throw CheiralityViolation("solution places a feature behind a camera");
  }
  return sol;
}

}  // namespace radarvi
