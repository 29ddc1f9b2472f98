#include "handrefine/loss.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace handrefine {

namespace {

constexpr double kDegenerateArea = 1e-12;

Vec3 face_normal(const PosedMesh& mesh, int f) {
  const Vec3 a = mesh.vertices.row(mesh.faces(f, 0));
  const Vec3 b = mesh.vertices.row(mesh.faces(f, 1));
  const Vec3 c = mesh.vertices.row(mesh.faces(f, 2));
  return (b - a).cross(c - a);
}

}  // namespace

MeshTopology build_topology(const Faces& faces, int num_vertices) {
  MeshTopology topo;
  topo.neighbors.resize(num_vertices);
  std::map<std::pair<int, int>, int> edge_index;
  for (int f = 0; f < faces.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = faces(f, k);
      const int b = faces(f, (k + 1) % 3);
      const auto key = std::minmax(a, b);
      auto it = edge_index.find(key);
      if (it == edge_index.end()) {
        const int id = static_cast<int>(topo.edge_vertices.size());
        edge_index.emplace(key, id);
        topo.edge_vertices.push_back({key.first, key.second});
        topo.edge_faces.push_back({f, -1});
        topo.neighbors[a].push_back(b);
        topo.neighbors[b].push_back(a);
      } else {
        auto& ef = topo.edge_faces[it->second];
        if (ef[1] == -1)
          ef[1] = f;
        // Non-manifold (>2 faces) edges keep the first two; the model
        // validator rejects such meshes before they reach the losses.
      }
    }
  }
  return topo;
}

double silhouette_loss(const SilhouetteImage& rendered, const SilhouetteImage& target) {
  if (rendered.width != target.width || rendered.height != target.height)
    throw std::runtime_error("silhouette_loss: dimension mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < rendered.values.size(); ++i) {
    const double d = rendered.values[i] - target.values[i];
    sum += d * d;
  }
  return sum / static_cast<double>(rendered.values.size());
}

double vertex_offset_loss(const Points3& d_vertices) {
  if (!d_vertices.allFinite())
    throw std::runtime_error("vertex_offset_loss: non-finite offsets");
  return d_vertices.squaredNorm();
}

double edge_loss(const PosedMesh& mesh, const MeshTopology& topo) {
  double sum = 0.0;
  for (const auto& e : topo.edge_vertices) {
    const Vec3 d = mesh.vertices.row(e[0]) - mesh.vertices.row(e[1]);
    sum += 2.0 * d.squaredNorm();  // each undirected edge counted twice
  }
  return sum;
}

Points3 edge_loss_gradient(const PosedMesh& mesh, const MeshTopology& topo) {
  Points3 grad = Points3::Zero(mesh.vertices.rows(), 3);
  for (const auto& e : topo.edge_vertices) {
    const Vec3 d = mesh.vertices.row(e[0]) - mesh.vertices.row(e[1]);
    grad.row(e[0]) += 4.0 * d.transpose();
    grad.row(e[1]) -= 4.0 * d.transpose();
  }
  return grad;
}

double laplacian_loss(const PosedMesh& mesh, const MeshTopology& topo) {
  double sum = 0.0;
  for (size_t v = 0; v < topo.neighbors.size(); ++v) {
    const auto& nbrs = topo.neighbors[v];
    if (nbrs.empty()) continue;
    Vec3 mean = Vec3::Zero();
    for (int k : nbrs) mean += Vec3(mesh.vertices.row(k));
    mean /= static_cast<double>(nbrs.size());
    sum += (Vec3(mesh.vertices.row(v)) - mean).squaredNorm();
  }
  return sum;
}

Points3 laplacian_loss_gradient(const PosedMesh& mesh, const MeshTopology& topo) {
  const int nv = static_cast<int>(mesh.vertices.rows());
  Points3 delta = Points3::Zero(nv, 3);
  for (int v = 0; v < nv; ++v) {
    const auto& nbrs = topo.neighbors[v];
    if (nbrs.empty()) continue;
    Vec3 mean = Vec3::Zero();
    for (int k : nbrs) mean += Vec3(mesh.vertices.row(k));
    mean /= static_cast<double>(nbrs.size());
    delta.row(v) = Vec3(mesh.vertices.row(v)) - mean;
  }
  Points3 grad = 2.0 * delta;
  for (int v = 0; v < nv; ++v) {
    const auto& nbrs = topo.neighbors[v];
    if (nbrs.empty()) continue;
    const double inv = 1.0 / static_cast<double>(nbrs.size());
    for (int k : nbrs) grad.row(k) -= 2.0 * inv * delta.row(v);
  }
  return grad;
}

double normal_loss(const PosedMesh& mesh, const MeshTopology& topo) {
  double sum = 0.0;
  for (size_t e = 0; e < topo.edge_faces.size(); ++e) {
    const auto [fl, fr] = topo.edge_faces[e];
    if (fl < 0 || fr < 0) continue;
    const Vec3 nl = face_normal(mesh, fl);
    const Vec3 nr = face_normal(mesh, fr);
    const double ll = nl.norm(), lr = nr.norm();
    if (ll < kDegenerateArea || lr < kDegenerateArea) continue;
    sum += 1.0 - nl.dot(nr) / (ll * lr);
  }
  return sum;
}

Points3 normal_loss_gradient(const PosedMesh& mesh, const MeshTopology& topo) {
  const int nv = static_cast<int>(mesh.vertices.rows());
  Points3 grad = Points3::Zero(nv, 3);

  // Accumulate d loss / d normal per face, then push through the cross
  // products once per face.
  const int nf = static_cast<int>(mesh.faces.rows());
  std::vector<Vec3> dnormal(nf, Vec3::Zero());
  for (size_t e = 0; e < topo.edge_faces.size(); ++e) {
    const auto [fl, fr] = topo.edge_faces[e];
    if (fl < 0 || fr < 0) continue;
    const Vec3 nl = face_normal(mesh, fl);
    const Vec3 nr = face_normal(mesh, fr);
    const double ll = nl.norm(), lr = nr.norm();
    if (ll < kDegenerateArea || lr < kDegenerateArea) continue;
    const double dot = nl.dot(nr);
    // d(1 - cos)/d nl and symmetric term for nr.
    dnormal[fl] += -(nr / (ll * lr) - dot * nl / (ll * ll * ll * lr));
    dnormal[fr] += -(nl / (ll * lr) - dot * nr / (lr * lr * lr * ll));
  }
  for (int f = 0; f < nf; ++f) {
    const Vec3& g = dnormal[f];
    if (g.isZero(0.0)) continue;
    const Vec3 a = mesh.vertices.row(mesh.faces(f, 0));
    const Vec3 b = mesh.vertices.row(mesh.faces(f, 1));
    const Vec3 c = mesh.vertices.row(mesh.faces(f, 2));
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    // n = e1 x e2; g . dn maps to the corners as below.
    grad.row(mesh.faces(f, 1)) += e2.cross(g).transpose();
    grad.row(mesh.faces(f, 2)) += g.cross(e1).transpose();
    grad.row(mesh.faces(f, 0)) -= (e2.cross(g) + g.cross(e1)).transpose();
  }
  return grad;
}

namespace {

WeakPerspectiveCamera offset_camera(const WeakPerspectiveCamera& cam,
                                    const Vec3& d_camera) {
  WeakPerspectiveCamera out = cam;
  out.t += d_camera.head<2>();
  out.delta += d_camera.z();
  if (!(out.delta > 0.0))
    throw std::runtime_error("loss: camera scale must stay positive");
  return out;
}

Points3 to_view(const LossView& view, const Points3& verts) {
  Points3 out(verts.rows(), 3);
  for (Eigen::Index i = 0; i < verts.rows(); ++i)
    out.row(i) = (view.view_rotation * Vec3(verts.row(i)) + view.view_translation)
                     .transpose();
  return out;
}

LossBreakdown compose(const LossWeights& w, double sil, double v, double n,
                      double lap, double edge) {
  LossBreakdown b;
  b.sil = sil;
  b.v = v;
  b.n = n;
  b.lap = lap;
  b.edge = edge;
  b.total = w.lambda1 * b.sil + w.lambda2 * b.v + w.lambda3 * b.n +
            w.lambda4 * b.lap + w.lambda5 * b.edge;
  return b;
}

}  // namespace

LossBreakdown total_loss(const HandModelData& model, const HandParams& params,
                         const ParamOffsets& offsets,
                         const std::vector<LossView>& views,
                         const LossWeights& weights,
                         const RasterSettings& settings) {
  if (views.empty()) throw std::runtime_error("total_loss: no views");
  const PosedMesh mesh = apply_offsets(model, params, offsets);
  const MeshTopology topo = build_topology(model.faces, model.num_vertices());

  double sil = 0.0;
  for (const auto& view : views) {
    const WeakPerspectiveCamera cam = offset_camera(view.camera, offsets.d_camera);
    const Points3 view_verts = to_view(view, mesh.vertices);
    const Points2 verts2d = project(cam, view_verts);
    const SilhouetteImage rendered =
        render_soft_silhouette(verts2d, model.faces, settings);
    sil += silhouette_loss(rendered, view.target);
  }
  sil /= static_cast<double>(views.size());

  return compose(weights, sil, vertex_offset_loss(offsets.d_vertices),
                 normal_loss(mesh, topo), laplacian_loss(mesh, topo),
                 edge_loss(mesh, topo));
}

ParamOffsets loss_gradient(const HandModelData& model, const HandParams& params,
                           const ParamOffsets& offsets,
                           const std::vector<LossView>& views,
                           const LossWeights& weights,
                           const RasterSettings& settings) {
  if (views.empty()) throw std::runtime_error("loss_gradient: no views");
  const PosedMesh mesh = apply_offsets(model, params, offsets);
  const MeshTopology topo = build_topology(model.faces, model.num_vertices());
  const int nv = model.num_vertices();
  const double npix = double(settings.width) * double(settings.height);

  ParamOffsets grad = ParamOffsets::zeros(model);

  // dL/d(mesh vertices) in the mesh frame, silhouette + regularizers.
  Points3 g_mesh = Points3::Zero(nv, 3);

  for (const auto& view : views) {
    const WeakPerspectiveCamera cam = offset_camera(view.camera, offsets.d_camera);
    const Points3 view_verts = to_view(view, mesh.vertices);
    const Points2 verts2d = project(cam, view_verts);
    const SilhouetteImage rendered =
        render_soft_silhouette(verts2d, model.faces, settings);

    // dL_sil/dS = 2 (S - S*) / n_pixels, averaged over views, weighted.
    SilhouetteImage upstream(settings.width, settings.height);
    const double scale = weights.lambda1 * 2.0 / (npix * views.size());
    for (size_t i = 0; i < upstream.values.size(); ++i)
      upstream.values[i] = scale * (rendered.values[i] - view.target.values[i]);

    const Points2 g2d =
        soft_silhouette_backward(verts2d, model.faces, settings, upstream);

    // Through the projection: du/dx = delta, dv/dy = delta; camera offset
    // gradient accumulates across views.
    for (int v = 0; v < nv; ++v) {
      const Vec2 u = g2d.row(v);
      grad.d_camera.head<2>() += u;
      grad.d_camera.z() += u.x() * view_verts(v, 0) + u.y() * view_verts(v, 1);
      const Vec3 g_view(cam.delta * u.x(), cam.delta * u.y(), 0.0);
      g_mesh.row(v) += (view.view_rotation.transpose() * g_view).transpose();
    }
  }

  g_mesh += weights.lambda3 * normal_loss_gradient(mesh, topo);
  g_mesh += weights.lambda4 * laplacian_loss_gradient(mesh, topo);
  g_mesh += weights.lambda5 * edge_loss_gradient(mesh, topo);

  // dv enters the mesh directly plus its own quadratic penalty.
  grad.d_vertices = g_mesh + 2.0 * weights.lambda2 * offsets.d_vertices;

  // Pose/shape through the LBS Jacobians at the offset parameters.
  const LbsJacobians jac = lbs_jacobians(model, params.pose + offsets.d_pose,
                                         params.shape + offsets.d_shape);
  const Eigen::Map<const VecX> g_flat(g_mesh.data(), 3 * nv);
  grad.d_pose = jac.d_pose.transpose() * g_flat;
  grad.d_shape = jac.d_shape.transpose() * g_flat;
  return grad;
}

}  // namespace handrefine
