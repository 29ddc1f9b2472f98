#pragma once

#include "handrefine/types.hpp"

namespace handrefine {

// Weak-perspective camera c = (t, delta): orthographic xy after uniform
// scaling delta (pixels per meter) and image-plane translation t (pixels).
// Image y grows downward; the camera frame is x-right, y-down, z-forward,
// so projection needs no sign flip.
struct WeakPerspectiveCamera {
  Vec2 t{0.0, 0.0};
  double delta{1.0};
};

// Rigid transform mapping left-camera-frame points to right-camera-frame,
// plus the reference pinhole (focal, principal point) used to lift a
// weak-perspective camera to a depth.
struct StereoRig {
  Mat3 rotation{Mat3::Identity()};
  Vec3 translation{Vec3::Zero()};
  double focal{1.0};
  Vec2 principal_point{0.0, 0.0};

  void validate() const;  // throws on non-orthonormal rotation or focal <= 0
  StereoRig inverse() const;
};

// u = t_x + delta*x, v = t_y + delta*y; z is ignored.
Points2 project(const WeakPerspectiveCamera& cam, const Points3& points);
Vec2 project(const WeakPerspectiveCamera& cam, const Vec3& point);

// Re-expresses a left-view weak-perspective camera in the right view:
// lift the root depth from delta via the rig focal, move the root through
// the rig transform, and re-project. Throws "root behind camera" when the
// transformed depth is not positive.
WeakPerspectiveCamera transfer_camera(const StereoRig& rig,
                                      const WeakPerspectiveCamera& cam_left);

// Component-wise mean of (t_x, t_y, delta).
WeakPerspectiveCamera average_camera(const WeakPerspectiveCamera& a,
                                     const WeakPerspectiveCamera& b);

}  // namespace handrefine
