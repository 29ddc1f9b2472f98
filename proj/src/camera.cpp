#include "handrefine/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace handrefine {

void StereoRig::validate() const {
  if (!(focal > 0.0)) throw std::runtime_error("rig: focal must be > 0");
  const Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::runtime_error("rig: rotation is not orthonormal");
  if (rotation.determinant() < 0.0)
    throw std::runtime_error("rig: rotation has negative determinant");
}

StereoRig StereoRig::inverse() const {
  StereoRig inv = *this;
  inv.rotation = rotation.transpose();
  inv.translation = -(rotation.transpose() * translation);
  return inv;
}

Vec2 project(const WeakPerspectiveCamera& cam, const Vec3& point) {
  if (!point.allFinite()) throw std::runtime_error("project: non-finite point");
  return Vec2(cam.t.x() + cam.delta * point.x(),
              cam.t.y() + cam.delta * point.y());
}

Points2 project(const WeakPerspectiveCamera& cam, const Points3& points) {
  if (!(cam.delta > 0.0)) throw std::runtime_error("project: delta must be > 0");
  if (!points.allFinite()) throw std::runtime_error("project: non-finite points");
  Points2 out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(i, 0) = cam.t.x() + cam.delta * points(i, 0);
    out(i, 1) = cam.t.y() + cam.delta * points(i, 1);
  }
  return out;
}

WeakPerspectiveCamera transfer_camera(const StereoRig& rig,
                                      const WeakPerspectiveCamera& cam_left) {
  rig.validate();
  if (!(cam_left.delta > 0.0))
    throw std::runtime_error("transfer_camera: delta must be > 0");

  // Lift: the weak-perspective scale fixes the root depth, and t encodes
  // the root pixel under the reference pinhole.
  const double z_l = rig.focal / cam_left.delta;
  const Vec3 root_left((cam_left.t.x() - rig.principal_point.x()) / rig.focal * z_l,
                       (cam_left.t.y() - rig.principal_point.y()) / rig.focal * z_l,
                       z_l);
  const Vec3 root_right = rig.rotation * root_left + rig.translation;
  if (!(root_right.z() > 0.0))
    throw std::runtime_error("transfer_camera: root behind camera");

  WeakPerspectiveCamera out;
  out.delta = rig.focal / root_right.z();
  out.t.x() = rig.principal_point.x() + rig.focal * root_right.x() / root_right.z();
  out.t.y() = rig.principal_point.y() + rig.focal * root_right.y() / root_right.z();
  return out;
}

WeakPerspectiveCamera average_camera(const WeakPerspectiveCamera& a,
                                     const WeakPerspectiveCamera& b) {
  WeakPerspectiveCamera out;
  out.t = 0.5 * (a.t + b.t);
  out.delta = 0.5 * (a.delta + b.delta);
  return out;
}

}  // namespace handrefine
