#pragma once

#include <vector>

#include "handrefine/hand_model.hpp"
#include "handrefine/soft_raster.hpp"

namespace handrefine {

struct LossWeights {
  double lambda1 = 1.0;  // silhouette
  double lambda2 = 1.0;  // vertex offsets
  double lambda3 = 1.0;  // normal consistency
  double lambda4 = 1.0;  // Laplacian
  double lambda5 = 0.1;  // edge length
};

struct LossBreakdown {
  double sil = 0.0;
  double v = 0.0;
  double n = 0.0;
  double lap = 0.0;
  double edge = 0.0;
  double total = 0.0;
};

// One rendering view: a target silhouette, a camera, and the rigid
// transform taking mesh-frame points into this view's camera frame
// (identity for mono and for the right view of a stereo pair).
struct LossView {
  SilhouetteImage target;
  WeakPerspectiveCamera camera;
  Mat3 view_rotation{Mat3::Identity()};
  Vec3 view_translation{Vec3::Zero()};
};

// Mesh connectivity shared by the regularizers; build once per topology.
struct MeshTopology {
  std::vector<std::vector<int>> neighbors;          // one-ring vertex ids
  std::vector<std::array<int, 2>> edge_vertices;    // unique undirected edges
  std::vector<std::array<int, 2>> edge_faces;       // adjacent faces, -1 = open
};
MeshTopology build_topology(const Faces& faces, int num_vertices);

// Mean over pixels of (rendered - target)^2.
double silhouette_loss(const SilhouetteImage& rendered, const SilhouetteImage& target);

// ||dv||^2 over all entries.
double vertex_offset_loss(const Points3& d_vertices);

// Sum over ordered vertex-neighbor pairs of squared edge length.
double edge_loss(const PosedMesh& mesh, const MeshTopology& topo);

// Sum over vertices of ||v - mean(one-ring)||^2.
double laplacian_loss(const PosedMesh& mesh, const MeshTopology& topo);

// Sum over interior edges of 1 - cos(angle between face normals);
// edges touching zero-area faces are skipped.
double normal_loss(const PosedMesh& mesh, const MeshTopology& topo);

// L = l1 sil + l2 v + l3 n + l4 lap + l5 edge on H = M(p+dp, s+ds) + dv,
// rendered per view with camera c + dc. The silhouette term averages over
// views (one view = mono).
LossBreakdown total_loss(const HandModelData& model, const HandParams& params,
                         const ParamOffsets& offsets,
                         const std::vector<LossView>& views,
                         const LossWeights& weights,
                         const RasterSettings& settings);

// Exact gradient of LossBreakdown.total with respect to the offsets.
ParamOffsets loss_gradient(const HandModelData& model, const HandParams& params,
                           const ParamOffsets& offsets,
                           const std::vector<LossView>& views,
                           const LossWeights& weights,
                           const RasterSettings& settings);

// Vertex-position gradients of the regularizers (used by loss_gradient and
// exposed for tests).
Points3 edge_loss_gradient(const PosedMesh& mesh, const MeshTopology& topo);
Points3 laplacian_loss_gradient(const PosedMesh& mesh, const MeshTopology& topo);
Points3 normal_loss_gradient(const PosedMesh& mesh, const MeshTopology& topo);

}  // namespace handrefine
