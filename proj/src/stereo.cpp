#include "handrefine/stereo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace handrefine {

void StereoWeights::validate() const {
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!(w[i] >= 0.0 && w[i] <= 1.0))
      throw std::runtime_error("stereo weights: entry outside [0, 1]");
}

namespace {

// Geodesic interpolation between two rotations given as axis-angle.
Vec3 slerp_axis_angle(const Vec3& from, const Vec3& to, double t) {
  const Mat3 r0 = axis_angle_to_matrix(from);
  const Mat3 r1 = axis_angle_to_matrix(to);
  const Vec3 rel = matrix_to_axis_angle(r0.transpose() * r1);
  return matrix_to_axis_angle(r0 * axis_angle_to_matrix(t * rel));
}

}  // namespace

VecX fuse_pose(const VecX& right, const VecX& left, const StereoWeights& w,
               const StereoRig& rig, bool slerp_blend) {
  if (right.size() != left.size() || right.size() != w.w.size())
    throw std::runtime_error("fuse_pose: length mismatch");
  if (right.size() < 3 || right.size() % 3 != 0)
    throw std::runtime_error("fuse_pose: pose length must be a multiple of 3");
  w.validate();

  // The left global rotation lives in the left camera frame; rotate it
  // into the right frame before blending.
  VecX left_aligned = left;
  if (!rig.rotation.isIdentity(0.0))
    left_aligned.head<3>() = matrix_to_axis_angle(
        rig.rotation * axis_angle_to_matrix(left.head<3>()));

  if (!slerp_blend)
    return w.w.array() * right.array() + (1.0 - w.w.array()) * left_aligned.array();

  VecX out(right.size());
  for (Eigen::Index j = 0; j < right.size() / 3; ++j) {
    // Per-block weight: mean of the three entries.
    const double wj = w.w.segment<3>(3 * j).mean();
    out.segment<3>(3 * j) =
        slerp_axis_angle(left_aligned.segment<3>(3 * j), right.segment<3>(3 * j), wj);
  }
  return out;
}

VecX fuse_shape(const VecX& s_right, const VecX& s_left) {
  if (s_right.size() != s_left.size())
    throw std::runtime_error("fuse_shape: length mismatch");
  return 0.5 * (s_right + s_left);
}

HandParams fuse_prediction(const ViewPrediction& right, const ViewPrediction& left,
                           const StereoWeights& w, const StereoRig& rig,
                           bool slerp_blend) {
  if (right.view == left.view)
    throw std::runtime_error("fuse_prediction: views must be distinct");
  HandParams fused;
  fused.pose = fuse_pose(right.params.pose, left.params.pose, w, rig, slerp_blend);
  fused.shape = fuse_shape(right.params.shape, left.params.shape);
  fused.camera = average_camera(right.params.camera,
                                transfer_camera(rig, left.params.camera));
  return fused;
}

std::vector<std::vector<int>> default_joint_vertex_map(const HandModelData& model) {
  std::vector<std::vector<int>> map(model.num_joints());
  for (int v = 0; v < model.num_vertices(); ++v) {
    int j = 0;
    model.skin_weights.row(v).maxCoeff(&j);
    map[j].push_back(v);
  }
  return map;
}

namespace {

double joint_visibility(const FragmentBuffer& frag, const Points2& verts2d,
                        const HandModelData& model, int joint,
                        const std::vector<int>& vertex_ids) {
  if (vertex_ids.empty()) return 0.0;
  // Silhouette vertices often sit a fraction of a pixel outside the hard
  // coverage, so take the nearest covered fragment within a small window.
  constexpr int kRadius = 2;
  int visible = 0;
  for (int v : vertex_ids) {
    const int cx = static_cast<int>(std::floor(verts2d(v, 0)));
    const int cy = static_cast<int>(std::floor(verts2d(v, 1)));
    const Fragment* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (int y = cy - kRadius; y <= cy + kRadius; ++y)
      for (int x = cx - kRadius; x <= cx + kRadius; ++x) {
        if (x < 0 || y < 0 || x >= frag.width || y >= frag.height) continue;
        const Fragment& fr = frag.at(x, y);
        if (fr.face_id < 0) continue;
        const double d2 = (Vec2(x + 0.5, y + 0.5) -
                           Vec2(verts2d(v, 0), verts2d(v, 1))).squaredNorm();
        if (d2 < best) {
          best = d2;
          nearest = &fr;
        }
      }
    if (!nearest) continue;
    for (int k = 0; k < 3; ++k)
      if (model.skin_weights(model.faces(nearest->face_id, k), joint) > 0.0) {
        ++visible;
        break;
      }
  }
  return static_cast<double>(visible) / static_cast<double>(vertex_ids.size());
}

}  // namespace

StereoWeights heuristic_weights(const FragmentBuffer& frag_right,
                                const FragmentBuffer& frag_left,
                                const Points2& verts2d_right,
                                const Points2& verts2d_left,
                                const HandModelData& model,
                                const std::vector<std::vector<int>>& joint_vertex_map) {
  const int nj = model.num_joints();
  if (static_cast<int>(joint_vertex_map.size()) != nj)
    throw std::runtime_error("heuristic_weights: joint map size mismatch");

  StereoWeights weights;
  weights.w = VecX::Constant(model.pose_dim(), 0.5);
  for (int j = 1; j < nj; ++j) {
    const double vr =
        joint_visibility(frag_right, verts2d_right, model, j, joint_vertex_map[j]);
    const double vl =
        joint_visibility(frag_left, verts2d_left, model, j, joint_vertex_map[j]);
    const double w = (vr + vl) > 0.0 ? vr / (vr + vl) : 0.5;
    weights.w.segment<3>(3 * j).setConstant(w);
  }
  return weights;
}

}  // namespace handrefine
