#pragma once

#include <vector>

#include "handrefine/hand_model.hpp"
#include "handrefine/soft_raster.hpp"

namespace handrefine {

// Per-pose-dimension convex blending coefficients, entries in [0, 1].
struct StereoWeights {
  VecX w;
  void validate() const;
};

enum class ViewSide { kLeft, kRight };

struct ViewPrediction {
  HandParams params;
  ViewSide view = ViewSide::kRight;
};

// p_fused = w * p_right + (1 - w) * p_left, after re-expressing the left
// global rotation block in the right camera frame through the rig. Set
// slerp_blend for geodesic blending of the rotation blocks instead of the
// linear axis-angle mix.
VecX fuse_pose(const VecX& right, const VecX& left, const StereoWeights& w,
               const StereoRig& rig, bool slerp_blend = false);

// Element-wise mean.
VecX fuse_shape(const VecX& s_right, const VecX& s_left);

// Pose via fuse_pose, shape via fuse_shape, camera via
// average_camera(right, transfer_camera(rig, left)).
HandParams fuse_prediction(const ViewPrediction& right, const ViewPrediction& left,
                           const StereoWeights& w, const StereoRig& rig,
                           bool slerp_blend = false);

// Visibility heuristic standing in for the learned weight regressor.
// Per joint, visibility in a view = fraction of the joint's mapped
// vertices whose covering fragment belongs to a face inside the joint's
// skin-weight support; the joint's weight block = v_R / (v_R + v_L)
// (0.5 when both vanish, global block fixed at 0.5).
StereoWeights heuristic_weights(const FragmentBuffer& frag_right,
                                const FragmentBuffer& frag_left,
                                const Points2& verts2d_right,
                                const Points2& verts2d_left,
                                const HandModelData& model,
                                const std::vector<std::vector<int>>& joint_vertex_map);

// Default joint->vertices map: each vertex belongs to its strongest
// skinning joint.
std::vector<std::vector<int>> default_joint_vertex_map(const HandModelData& model);

}  // namespace handrefine
