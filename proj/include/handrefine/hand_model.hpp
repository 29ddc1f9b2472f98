#pragma once

#include <array>
#include <vector>

#include "handrefine/camera.hpp"
#include "handrefine/types.hpp"

namespace handrefine {

// Linear-blend-skinned parametric hand model: template mesh, PCA shape
// basis, joint regressor, skinning weights and kinematic tree. Immutable
// after load; forward/apply_offsets are pure functions.
struct HandModelData {
  Points3 template_vertices;           // V x 3, meters
  Faces faces;                         // F x 3, CCW winding = outward normal
  std::vector<Points3> shape_basis;    // S entries, each V x 3
  MatX joint_regressor;                // J x V, rows sum to 1
  MatX skin_weights;                   // V x J, rows sum to 1, non-negative
  std::vector<int> parents;            // J entries, parents[0] = -1
  std::array<int, 5> fingertip_vertex_ids{};
  // Reserved for pose-corrective blendshapes; unused by the LBS forward.
  std::vector<Points3> pose_basis;
  // Optional per-face corner UVs (F x 3 x 2, flattened rows u0 v0 u1 v1 u2 v2).
  MatX face_uvs;

  int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
  int num_faces() const { return static_cast<int>(faces.rows()); }
  int num_joints() const { return static_cast<int>(parents.size()); }
  int num_shapes() const { return static_cast<int>(shape_basis.size()); }
  int pose_dim() const { return 3 * num_joints(); }

  // Checks every structural invariant; throws std::runtime_error on the
  // first violation.
  void validate() const;
};

struct HandParams {
  VecX pose;   // 3J axis-angle radians; block 0 = global rotation
  VecX shape;  // S PCA coefficients
  WeakPerspectiveCamera camera;
};

// Test-time refinement offsets dP = (dpose, dshape, dvertices, dcamera).
struct ParamOffsets {
  VecX d_pose;
  VecX d_shape;
  Points3 d_vertices;
  Vec3 d_camera{Vec3::Zero()};  // (dt_x, dt_y, ddelta)

  static ParamOffsets zeros(const HandModelData& model);
  bool all_finite() const;
};

struct PosedMesh {
  Points3 vertices;  // V x 3, camera frame
  Faces faces;       // shared with the model
  Points3 joints3d;  // (J+5) x 3: skeleton joints then fingertip vertices
};

// LBS forward: shaped template, regressed rest joints, per-joint world
// transforms composed along parents (rotation about each joint's rest
// position; global block rotates about rest joint 0), skinned vertices.
PosedMesh forward(const HandModelData& model, const VecX& pose, const VecX& shape);

// H = M(p + dp, s + ds) + dv; dv is added after skinning and does not
// move the reported joints.
PosedMesh apply_offsets(const HandModelData& model, const HandParams& params,
                        const ParamOffsets& offsets);

// Dense LBS Jacobians at (pose, shape): d vertices / d pose (3V x 3J) and
// d vertices / d shape (3V x S), with vertex v occupying rows 3v..3v+2.
struct LbsJacobians {
  MatX d_pose;
  MatX d_shape;
};
LbsJacobians lbs_jacobians(const HandModelData& model, const VecX& pose,
                           const VecX& shape);

// Rodrigues rotation for an axis-angle vector.
Mat3 axis_angle_to_matrix(const Vec3& aa);
Vec3 matrix_to_axis_angle(const Mat3& r);

// Procedural MANO-shaped stand-in: box palm plus five finger chains,
// J = 16, S = 10, closed 2-manifold. Deterministic in (seed, finger_segments).
HandModelData toy_model(unsigned seed, int finger_segments);

}  // namespace handrefine
