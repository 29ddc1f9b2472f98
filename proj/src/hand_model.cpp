#include "handrefine/hand_model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace handrefine {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// 3x4 rigid transform [R | t].
struct Rigid {
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  Vec3 apply(const Vec3& p) const { return r * p + t; }
  Rigid operator*(const Rigid& o) const { return {r * o.r, r * o.t + t}; }
  Rigid inverse() const { return {r.transpose(), -(r.transpose() * t)}; }
};

struct JointChain {
  Points3 rest_joints;        // J x 3, regressed from the shaped template
  std::vector<Rigid> world;   // per-joint world transforms
  std::vector<Vec3> drift;    // world translation minus the rest joint
};

JointChain compose_chain(const HandModelData& model, const VecX& pose,
                         const Points3& shaped) {
  const int nj = model.num_joints();
  JointChain chain;
  chain.rest_joints = model.joint_regressor * shaped;
  chain.world.resize(nj);
  chain.drift.resize(nj);
  for (int j = 0; j < nj; ++j) {
    const Vec3 aa = pose.segment<3>(3 * j);
    const Mat3 r = axis_angle_to_matrix(aa);
    const Vec3 rest = chain.rest_joints.row(j);
    // Accumulating t - rest instead of t keeps the rest pose an exact
    // fixed point: every term below is identically zero at zero pose.
    if (model.parents[j] < 0) {
      chain.world[j].r = r;
      chain.drift[j] = Vec3::Zero();
    } else {
      const int p = model.parents[j];
      const Vec3 rest_parent = chain.rest_joints.row(p);
      chain.world[j].r = chain.world[p].r * r;
      chain.drift[j] =
          (chain.world[p].r - Mat3::Identity()) * (rest - rest_parent) +
          chain.drift[p];
    }
    chain.world[j].t = rest + chain.drift[j];
  }
  return chain;
}

}  // namespace

Mat3 axis_angle_to_matrix(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle < 1e-12) return Mat3::Identity() + skew(aa);
  const Vec3 axis = aa / angle;
  const Mat3 k = skew(axis);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

Vec3 matrix_to_axis_angle(const Mat3& r) {
  const double cos_a = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double angle = std::acos(cos_a);
  Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = axis.norm();
  if (angle < 1e-9) return 0.5 * axis;
  if (s < 1e-9) {
    // angle ~ pi: recover the axis from R + I.
    const Mat3 m = 0.5 * (r + Mat3::Identity());
    Vec3 a(std::sqrt(std::max(0.0, m(0, 0))), std::sqrt(std::max(0.0, m(1, 1))),
           std::sqrt(std::max(0.0, m(2, 2))));
    int k = 0;
    a.cwiseAbs().maxCoeff(&k);
    // Fix signs against the off-diagonal terms.
    if (k == 0) {
      if (m(0, 1) < 0) a.y() = -a.y();
      if (m(0, 2) < 0) a.z() = -a.z();
    } else if (k == 1) {
      if (m(0, 1) < 0) a.x() = -a.x();
      if (m(1, 2) < 0) a.z() = -a.z();
    } else {
      if (m(0, 2) < 0) a.x() = -a.x();
      if (m(1, 2) < 0) a.y() = -a.y();
    }
    return angle * a.normalized();
  }
  return (angle / s) * axis;
}

void HandModelData::validate() const {
  const int v = num_vertices();
  const int f = num_faces();
  const int j = num_joints();
  if (v < 3) throw std::runtime_error("model: too few vertices");
  if (f < 1) throw std::runtime_error("model: no faces");
  if (j < 1) throw std::runtime_error("model: no joints");

  std::vector<bool> referenced(v, false);
  for (int i = 0; i < f; ++i)
    for (int k = 0; k < 3; ++k) {
      const int idx = faces(i, k);
      if (idx < 0 || idx >= v)
        throw std::runtime_error("model: face index out of range");
      referenced[idx] = true;
    }
  for (int i = 0; i < v; ++i)
    if (!referenced[i])
      throw std::runtime_error("model: unreferenced vertex");

  for (const auto& basis : shape_basis)
    if (basis.rows() != v)
      throw std::runtime_error("model: shape basis dimension mismatch");
  if (joint_regressor.rows() != j || joint_regressor.cols() != v)
    throw std::runtime_error("model: joint regressor dimension mismatch");
  if (skin_weights.rows() != v || skin_weights.cols() != j)
    throw std::runtime_error("model: skin weights dimension mismatch");

  for (int i = 0; i < j; ++i)
    if (std::abs(joint_regressor.row(i).sum() - 1.0) > 1e-6)
      throw std::runtime_error("model: joint regressor rows not normalized");
  for (int i = 0; i < v; ++i) {
    if (skin_weights.row(i).minCoeff() < 0.0)
      throw std::runtime_error("model: negative skin weight");
    if (std::abs(skin_weights.row(i).sum() - 1.0) > 1e-6)
      throw std::runtime_error("model: weights not normalized");
  }

  if (parents[0] != -1)
    throw std::runtime_error("model: joint 0 must be the root");
  for (int i = 1; i < j; ++i)
    if (parents[i] < 0 || parents[i] >= i)
      throw std::runtime_error("model: invalid parent index");

  for (int id : fingertip_vertex_ids)
    if (id < 0 || id >= v)
      throw std::runtime_error("model: fingertip vertex id out of range");

  if (face_uvs.size() != 0 && (face_uvs.rows() != f || face_uvs.cols() != 6))
    throw std::runtime_error("model: face uv dimension mismatch");
}

ParamOffsets ParamOffsets::zeros(const HandModelData& model) {
  ParamOffsets o;
  o.d_pose = VecX::Zero(model.pose_dim());
  o.d_shape = VecX::Zero(model.num_shapes());
  o.d_vertices = Points3::Zero(model.num_vertices(), 3);
  o.d_camera.setZero();
  return o;
}

bool ParamOffsets::all_finite() const {
  return d_pose.allFinite() && d_shape.allFinite() && d_vertices.allFinite() &&
         d_camera.allFinite();
}

PosedMesh forward(const HandModelData& model, const VecX& pose, const VecX& shape) {
  if (pose.size() != model.pose_dim())
    throw std::runtime_error("forward: pose dimension mismatch");
  if (shape.size() != model.num_shapes())
    throw std::runtime_error("forward: shape dimension mismatch");
  if (!pose.allFinite() || !shape.allFinite())
    throw std::runtime_error("forward: non-finite parameters");

  Points3 shaped = model.template_vertices;
  for (int k = 0; k < model.num_shapes(); ++k)
    if (shape[k] != 0.0) shaped += shape[k] * model.shape_basis[k];

  const JointChain chain = compose_chain(model, pose, shaped);
  const int nv = model.num_vertices();
  const int nj = model.num_joints();

  PosedMesh mesh;
  mesh.faces = model.faces;
  mesh.vertices.resize(nv, 3);
  for (int v = 0; v < nv; ++v) {
    const Vec3 tv = shaped.row(v);
    // v' = tv + sum_j w ((R_j - I)(tv - rest_j) + drift_j): bitwise equal
    // to the template at the rest pose since each summand is exactly zero.
    Vec3 out = tv;
    for (int j = 0; j < nj; ++j) {
      const double w = model.skin_weights(v, j);
      if (w == 0.0) continue;
      const Vec3 rest = chain.rest_joints.row(j);
      out += w * ((chain.world[j].r - Mat3::Identity()) * (tv - rest) +
                  chain.drift[j]);
    }
    mesh.vertices.row(v) = out;
  }

  mesh.joints3d.resize(nj + 5, 3);
  for (int j = 0; j < nj; ++j) mesh.joints3d.row(j) = chain.world[j].t;
  for (int k = 0; k < 5; ++k)
    mesh.joints3d.row(nj + k) = mesh.vertices.row(model.fingertip_vertex_ids[k]);
  return mesh;
}

PosedMesh apply_offsets(const HandModelData& model, const HandParams& params,
                        const ParamOffsets& offsets) {
  if (offsets.d_pose.size() != model.pose_dim() ||
      offsets.d_shape.size() != model.num_shapes() ||
      offsets.d_vertices.rows() != model.num_vertices())
    throw std::runtime_error("apply_offsets: offset dimension mismatch");
  PosedMesh mesh = forward(model, params.pose + offsets.d_pose,
                           params.shape + offsets.d_shape);
  mesh.vertices += offsets.d_vertices;
  return mesh;
}

LbsJacobians lbs_jacobians(const HandModelData& model, const VecX& pose,
                           const VecX& shape) {
  const int nv = model.num_vertices();
  const int nj = model.num_joints();
  const int ns = model.num_shapes();
  const int np = model.pose_dim();

  Points3 shaped = model.template_vertices;
  for (int k = 0; k < ns; ++k)
    if (shape[k] != 0.0) shaped += shape[k] * model.shape_basis[k];
  const JointChain chain = compose_chain(model, pose, shaped);

  // Pose: dG_j/dtheta_{k,i} = G_pre(k) [dR_k | 0] G_k^{-1} G_j for joints j
  // in the subtree of k; vertices follow through the skinning sum.
  std::vector<std::vector<Rigid>> dworld(nj, std::vector<Rigid>(np));
  std::vector<std::vector<bool>> affects(nj, std::vector<bool>(nj, false));
  for (int j = 0; j < nj; ++j)
    for (int a = j; a >= 0; a = model.parents[a]) affects[a][j] = true;

  for (int k = 0; k < nj; ++k) {
    const Vec3 aa = pose.segment<3>(3 * k);
    const Mat3 rk = axis_angle_to_matrix(aa);
    const double angle2 = aa.squaredNorm();

    Mat3 dr[3];
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i);
      if (angle2 < 1e-16) {
        dr[i] = skew(e);
      } else {
        // Gallego-Yezzi derivative of the rotation w.r.t. axis-angle.
        const Vec3 v = aa[i] * aa + aa.cross((Mat3::Identity() - rk) * e);
        dr[i] = (skew(v) * rk) / angle2;
      }
    }

    const Rigid pre = model.parents[k] < 0 ? Rigid{} : chain.world[model.parents[k]];
    const Rigid inv_k = chain.world[k].inverse();
    for (int j = 0; j < nj; ++j) {
      if (!affects[k][j]) continue;
      const Rigid rel = inv_k * chain.world[j];
      for (int i = 0; i < 3; ++i) {
        Rigid d;
        d.r = pre.r * dr[i] * rel.r;
        d.t = pre.r * dr[i] * rel.t;
        dworld[j][3 * k + i] = d;
      }
    }
  }

  LbsJacobians jac;
  jac.d_pose = MatX::Zero(3 * nv, np);
  for (int v = 0; v < nv; ++v) {
    const Vec3 tv = shaped.row(v);
    for (int j = 0; j < nj; ++j) {
      const double w = model.skin_weights(v, j);
      if (w == 0.0) continue;
      const Vec3 rest = chain.rest_joints.row(j);
      const Vec3 local = tv - rest;
      for (int k = 0; k < nj; ++k) {
        if (!affects[k][j]) continue;
        for (int i = 0; i < 3; ++i) {
          const Rigid& d = dworld[j][3 * k + i];
          jac.d_pose.block<3, 1>(3 * v, 3 * k + i) += w * (d.r * local + d.t);
        }
      }
    }
  }

  // Shape: the shaped template and the rest joints both move; rotations do
  // not. Translations accumulate along the chain.
  jac.d_shape = MatX::Zero(3 * nv, ns);
  for (int k = 0; k < ns; ++k) {
    const Points3 djoints = model.joint_regressor * model.shape_basis[k];
    std::vector<Vec3> dt(nj);
    for (int j = 0; j < nj; ++j) {
      const Vec3 dj = djoints.row(j);
      if (model.parents[j] < 0) {
        dt[j] = dj;
      } else {
        const int p = model.parents[j];
        const Vec3 dp = djoints.row(p);
        dt[j] = dt[p] + chain.world[p].r * (dj - dp);
      }
    }
    for (int v = 0; v < nv; ++v) {
      const Vec3 db = model.shape_basis[k].row(v);
      Vec3 acc = Vec3::Zero();
      for (int j = 0; j < nj; ++j) {
        const double w = model.skin_weights(v, j);
        if (w == 0.0) continue;
        const Vec3 dj = djoints.row(j);
        acc += w * (chain.world[j].r * (db - dj) + dt[j]);
      }
      jac.d_shape.block<3, 1>(3 * v, k) = acc;
    }
  }
  return jac;
}

}  // namespace handrefine
