#pragma once

#include <vector>

#include <Eigen/Core>

#include "radarvi/types.hpp"

namespace radarvi {

struct SolverOptions {
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;    // damping multiplier on a rejected step
  double lambda_down = 10.0;  // damping divisor on an accepted step
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;  // on the max-abs entry of J^T r
  double cost_tolerance = 1e-12;      // on the relative cost decrease
  // The two cosine-law rows carry units of squared meters; they are divided
  // by this squared depth prior so that all rows are commensurate.
  double scene_depth_prior = 10.0;
  double reprojection_scale = 1.0;
  // Retries from perturbed object translations when the first attempt stalls
  // above restart_cost_threshold.
  int max_restarts = 3;
  double restart_cost_threshold = 1e-8;
  double restart_step = 0.5;  // meters, along the camera motion direction
  // Singular-value ratio of the final Jacobian below which the problem is
  // reported degenerate: an unconstrained direction exists and the minimizer
  // is a family rather than a point.
  double degenerate_singular_ratio = 1e-7;
};

enum class SolveStatus { kConverged, kMaxIterations, kDegenerate, kFailed };

// All tracked features of one rigid object over one frame pair, plus the
// camera motion (previous frame -> current frame) and intrinsics.
struct ReconstructionProblem {
  std::vector<FeatureTrack> tracks;
  CameraIntrinsics intrinsics;
  RigidTransform camera_pose;

  // Throws UnderdeterminedObject for fewer than two tracks and InvalidConfig
  // for tracks with mixed object ids.
  void validate() const;
};

struct ReconstructionSolution {
  std::vector<Eigen::Vector3d> positions;  // previous-camera-frame feature points
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // shared object translation
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::kFailed;
  std::vector<double> cost_history;  // accepted iterates only, non-increasing
};

// Midpoint of the common perpendicular of the two observation rays, treating
// the feature as static. Throws DegenerateRays when the rays are parallel
// (angle <= 1e-6 rad) and NonPositiveDepth when the midpoint falls behind
// either camera.
Eigen::Vector3d triangulate_midpoint(const FeatureTrack& track, const CameraIntrinsics& K,
                                     const RigidTransform& T);

// State vector layout: [P_1, ..., P_N, delta] with 3N + 3 entries.
Eigen::VectorXd stack_state(const std::vector<Eigen::Vector3d>& positions,
                            const Eigen::Vector3d& translation);

// Unweighted stacked residual, 6N entries in track order.
Eigen::VectorXd stacked_residual(const ReconstructionProblem& problem, const Eigen::VectorXd& x);

// Central-difference Jacobian of the stacked residual, (6N) x (3N + 3), with
// step max(1e-6, 1e-6 |x_j|). Rows of feature i are structurally zero in the
// position columns of every other feature and those entries are never touched.
Eigen::MatrixXd residual_jacobian(const ReconstructionProblem& problem, const Eigen::VectorXd& x);

// Damped Gauss-Newton (Levenberg-Marquardt) over all feature positions and
// the shared translation, starting from midpoint triangulations and a zero
// translation, with perturbed-translation restarts.
ReconstructionSolution solve_reconstruction(const ReconstructionProblem& problem,
                                            const SolverOptions& options = {});

}  // namespace radarvi
