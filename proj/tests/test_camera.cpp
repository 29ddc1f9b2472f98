#include <doctest.h>

#include "handrefine/camera.hpp"

using namespace handrefine;

TEST_CASE("weak-perspective projection formula") {
  WeakPerspectiveCamera cam;
  cam.t = Vec2(112, 112);
  cam.delta = 100.0;
  const Vec2 px = project(cam, Vec3(0.1, -0.2, 0.5));
  CHECK(px.x() == doctest::Approx(122.0));
  CHECK(px.y() == doctest::Approx(92.0));

  WeakPerspectiveCamera ident;  // delta = 1, t = 0
  ident.delta = 1.0;
  const Vec2 xy = project(ident, Vec3(3.5, -7.25, 42.0));
  CHECK(xy.x() == 3.5);
  CHECK(xy.y() == -7.25);
}

TEST_CASE("doubling delta doubles pixel distances") {
  WeakPerspectiveCamera cam;
  cam.t = Vec2(10, 20);
  cam.delta = 55.0;
  WeakPerspectiveCamera cam2 = cam;
  cam2.delta = 110.0;
  const Vec3 a(0.12, 0.3, 1.0), b(-0.4, 0.05, 2.0);
  const double d1 = (project(cam, a) - project(cam, b)).norm();
  const double d2 = (project(cam2, a) - project(cam2, b)).norm();
  CHECK(d2 == doctest::Approx(2.0 * d1));
}

TEST_CASE("transfer_camera with identity rig is the identity") {
  StereoRig rig;
  rig.focal = 500.0;
  rig.principal_point = Vec2(112, 112);
  WeakPerspectiveCamera cam;
  cam.t = Vec2(140, 100);
  cam.delta = 180.0;
  const WeakPerspectiveCamera out = transfer_camera(rig, cam);
  CHECK(out.t.x() == doctest::Approx(cam.t.x()).epsilon(1e-12));
  CHECK(out.t.y() == doctest::Approx(cam.t.y()).epsilon(1e-12));
  CHECK(out.delta == doctest::Approx(cam.delta).epsilon(1e-12));
}

TEST_CASE("transfer_camera pure z-translation, frozen numeric case") {
  StereoRig rig;
  rig.focal = 500.0;
  rig.principal_point = Vec2(112, 112);
  rig.translation = Vec3(0, 0, 2.0);
  WeakPerspectiveCamera cam;
  cam.t = Vec2(150, 112);
  cam.delta = 100.0;  // z_l = 5
  const WeakPerspectiveCamera out = transfer_camera(rig, cam);
  // X_l = (0.38, 0, 5); z_r = 7: delta = 500/7, t_x = 112 + 500*0.38/7.
  CHECK(out.delta == doctest::Approx(500.0 / 7.0).epsilon(1e-12));
  CHECK(out.delta < cam.delta);
  CHECK(out.t.x() == doctest::Approx(112.0 + 500.0 * 0.38 / 7.0).epsilon(1e-12));
  CHECK(out.t.y() == doctest::Approx(112.0).epsilon(1e-12));
}

TEST_CASE("transfer_camera rejects a root behind the camera") {
  StereoRig rig;
  rig.focal = 500.0;
  WeakPerspectiveCamera cam;
  cam.delta = 100.0;
  rig.translation = Vec3(0, 0, -500.0 / 100.0);  // exactly cancels z_l
  CHECK_THROWS_WITH_AS(transfer_camera(rig, cam),
                       "transfer_camera: root behind camera", std::runtime_error);
}

TEST_CASE("transfer_camera round-trips through the inverse rig") {
  StereoRig rig;
  rig.rotation = Eigen::AngleAxisd(0.3, Vec3(0.2, 0.9, -0.1).normalized())
                     .toRotationMatrix();
  rig.translation = Vec3(0.06, -0.01, 0.4);
  rig.focal = 600.0;
  rig.principal_point = Vec2(160, 120);
  WeakPerspectiveCamera cam;
  cam.t = Vec2(200, 90);
  cam.delta = 250.0;

  const WeakPerspectiveCamera there = transfer_camera(rig, cam);
  const WeakPerspectiveCamera back = transfer_camera(rig.inverse(), there);
  CHECK(std::abs(back.t.x() - cam.t.x()) / cam.t.x() < 1e-9);
  CHECK(std::abs(back.t.y() - cam.t.y()) / cam.t.y() < 1e-9);
  CHECK(std::abs(back.delta - cam.delta) / cam.delta < 1e-9);
}

TEST_CASE("average_camera is the component-wise mean and symmetric") {
  WeakPerspectiveCamera a, b;
  a.t = Vec2(0, 0);
  a.delta = 1.0;
  b.t = Vec2(2, 4);
  b.delta = 3.0;
  const WeakPerspectiveCamera mean = average_camera(a, b);
  CHECK(mean.t.x() == 1.0);
  CHECK(mean.t.y() == 2.0);
  CHECK(mean.delta == 2.0);
  const WeakPerspectiveCamera swapped = average_camera(b, a);
  CHECK(mean.t == swapped.t);
  CHECK(mean.delta == swapped.delta);

  const WeakPerspectiveCamera same = average_camera(a, a);
  CHECK(same.t == a.t);
  CHECK(same.delta == a.delta);
}

TEST_CASE("rig validation") {
  StereoRig rig;
  rig.rotation(0, 0) = 2.0;
  CHECK_THROWS(rig.validate());
}
