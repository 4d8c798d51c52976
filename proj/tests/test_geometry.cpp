#include <doctest.h>

#include <Eigen/Geometry>

#include "radarvi/errors.hpp"
#include "radarvi/geometry.hpp"
#include "radarvi/rng.hpp"

#include "support.hpp"

using namespace radarvi;
using testsupport::default_intrinsics;
using testsupport::make_object_fixture;

TEST_SUITE("geometry") {

TEST_CASE("project maps a camera point to exact pixel coordinates") {
  const CameraIntrinsics K = default_intrinsics();
  const PixelHomogeneous px = project(K, {0.5, -0.2, 4.0});
  CHECK(px.u == 377.5);
  CHECK(px.v == 217.0);
  CHECK(px.vec() == Eigen::Vector3d{377.5, 217.0, 1.0});
}

TEST_CASE("project rejects points at or behind the depth guard") {
  const CameraIntrinsics K = default_intrinsics();
  CHECK_THROWS_AS(project(K, {0.0, 0.0, 0.0}), NonPositiveDepth);
  CHECK_THROWS_AS(project(K, {0.0, 0.0, -1.0}), NonPositiveDepth);
  CHECK_THROWS_AS(project(K, {0.0, 0.0, 1e-10}), NonPositiveDepth);
  CHECK_NOTHROW(project(K, {0.0, 0.0, 2e-9}));
}

TEST_CASE("pseudo_projection_prev projects the translated point") {
  const CameraIntrinsics K = default_intrinsics();
  const Eigen::Vector3d p{0.3, -0.1, 5.0};
  const Eigen::Vector3d delta{0.2, 0.05, -0.4};
  const PixelHomogeneous a = pseudo_projection_prev(K, p, delta);
  const PixelHomogeneous b = project(K, p + delta);
  CHECK(a.u == b.u);
  CHECK(a.v == b.v);
}

TEST_CASE("pseudo_projection_curr returns normalized coordinates") {
  const PixelHomogeneous px = pseudo_projection_curr(RigidTransform::identity(), {1.0, 2.0, 4.0});
  CHECK(px.u == 0.25);
  CHECK(px.v == 0.5);

  RigidTransform behind;
  behind.translation = {0.0, 0.0, -4.0};
  CHECK_THROWS_AS(pseudo_projection_curr(behind, {1.0, 2.0, 4.0}), NonPositiveDepth);
}

TEST_CASE("cos_angle handles orthogonal, parallel and zero vectors") {
  CHECK(cos_angle({1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}) == 0.0);
  CHECK(cos_angle({1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cos_angle({1.0, 0.0, 0.0}, {-3.0, 0.0, 0.0}) == doctest::Approx(-1.0).epsilon(1e-15));
  const Eigen::Vector3d v{0.1 + 0.2, 0.7, 1.3};  // clamp absorbs rounding above one
  CHECK(cos_angle(v, v) <= 1.0);
  CHECK(cos_angle(v, -v) >= -1.0);
  CHECK_THROWS_AS(cos_angle({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}), ZeroVector);
}

TEST_CASE("normalized_pixel inverts the intrinsics") {
  const CameraIntrinsics K = default_intrinsics();
  const Eigen::Vector3d n = normalized_pixel(K, {377.5, 217.0});
  CHECK(n.x() == 0.125);
  CHECK(n.y() == -0.05);
  CHECK(n.z() == 1.0);

  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const double z = rng.uniform(1.0, 20.0);
    const Eigen::Vector3d p{rng.uniform(-0.6, 0.6) * z, rng.uniform(-0.6, 0.6) * z, z};
    const Eigen::Vector3d n2 = normalized_pixel(K, project(K, p));
    CHECK((n2 - p / z).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("track_residual vanishes at the generating state") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const testsupport::ObjectFixture fx = make_object_fixture(rng, 3);
    for (std::size_t i = 0; i < fx.problem.tracks.size(); ++i) {
      const DynamicFeatureState state{fx.positions[i], fx.translation};
      const Vector6d e = track_residual(fx.problem.intrinsics, fx.problem.camera_pose, state,
                                        fx.problem.tracks[i]);
      CHECK(e.cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("track_residual pixel rows respond in pixel units") {
  Rng rng(22);
  const testsupport::ObjectFixture fx = make_object_fixture(rng, 2);
  const DynamicFeatureState state{fx.positions[0], fx.translation};
  FeatureTrack track = fx.problem.tracks[0];
  const Vector6d base =
      track_residual(fx.problem.intrinsics, fx.problem.camera_pose, state, track);
  track.prev_pixel.u += 1.5;
  track.prev_pixel.v -= 2.25;
  const Vector6d shifted =
      track_residual(fx.problem.intrinsics, fx.problem.camera_pose, state, track);
  CHECK(shifted(2) - base(2) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(shifted(3) - base(3) == doctest::Approx(-2.25).epsilon(1e-12));
}

TEST_CASE("track_residual rejects states behind either camera") {
  const CameraIntrinsics K = default_intrinsics();
  const FeatureTrack track{{320.0, 240.0}, {320.0, 240.0}, 1};

  DynamicFeatureState state;
  state.position = {0.0, 0.0, -5.0};
  CHECK_THROWS_AS(track_residual(K, RigidTransform::identity(), state, track),
                  NonPositiveDepth);

  state.position = {0.0, 0.0, 5.0};
  state.translation = {0.0, 0.0, -6.0};  // current-time point behind the camera
  CHECK_THROWS_AS(track_residual(K, RigidTransform::identity(), state, track),
                  NonPositiveDepth);

  RigidTransform T;
  T.translation = {0.0, 0.0, -10.0};  // transformed points behind the current camera
  state.translation = Eigen::Vector3d::Zero();
  CHECK_THROWS_AS(track_residual(K, T, state, track), NonPositiveDepth);
}

}  // TEST_SUITE
