#include "handrefine/soft_raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace handrefine {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Tri2 {
  Vec2 a, b, c;
  double area2;  // signed doubled area

  bool degenerate() const { return std::abs(area2) < 1e-12; }

  bool contains(const Vec2& p) const {
    const double d0 = (b - a).x() * (p - a).y() - (b - a).y() * (p - a).x();
    const double d1 = (c - b).x() * (p - b).y() - (c - b).y() * (p - b).x();
    const double d2 = (a - c).x() * (p - c).y() - (a - c).y() * (p - c).x();
    const bool has_neg = d0 < 0 || d1 < 0 || d2 < 0;
    const bool has_pos = d0 > 0 || d1 > 0 || d2 > 0;
    return !(has_neg && has_pos);
  }
};

Tri2 make_tri(const Points2& v, const Faces& faces, int f) {
  Tri2 t{v.row(faces(f, 0)), v.row(faces(f, 1)), v.row(faces(f, 2)), 0.0};
  t.area2 = (t.b - t.a).x() * (t.c - t.a).y() - (t.b - t.a).y() * (t.c - t.a).x();
  return t;
}

// Squared distance from p to segment [a, b] plus the clamped parameter.
double segment_dist2(const Vec2& p, const Vec2& a, const Vec2& b, double* t_out) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  if (t_out) *t_out = t;
  return (p - (a + t * ab)).squaredNorm();
}

// Nearest boundary feature: edge index (0:ab, 1:bc, 2:ca) and parameter.
double boundary_dist2(const Tri2& t, const Vec2& p, int* edge, double* param) {
  const Vec2* corners[3] = {&t.a, &t.b, &t.c};
  double best = 0.0;
  for (int e = 0; e < 3; ++e) {
    double s = 0.0;
    const double d2 = segment_dist2(p, *corners[e], *corners[(e + 1) % 3], &s);
    if (e == 0 || d2 < best) {
      best = d2;
      if (edge) *edge = e;
      if (param) *param = s;
    }
  }
  return best;
}

struct Bounds {
  int x0, x1, y0, y1;  // inclusive pixel range, empty when x0 > x1
};

Bounds tri_bounds(const Tri2& t, double margin, int width, int height) {
  const double minx = std::min({t.a.x(), t.b.x(), t.c.x()}) - margin;
  const double maxx = std::max({t.a.x(), t.b.x(), t.c.x()}) + margin;
  const double miny = std::min({t.a.y(), t.b.y(), t.c.y()}) - margin;
  const double maxy = std::max({t.a.y(), t.b.y(), t.c.y()}) + margin;
  Bounds b;
  b.x0 = std::max(0, int(std::floor(minx - 0.5)));
  b.x1 = std::min(width - 1, int(std::ceil(maxx - 0.5)));
  b.y0 = std::max(0, int(std::floor(miny - 0.5)));
  b.y1 = std::min(height - 1, int(std::ceil(maxy - 0.5)));
  return b;
}

}  // namespace

void RasterSettings::validate() const {
  if (width <= 0 || height <= 0)
    throw std::runtime_error("raster: image dimensions must be positive");
  if (sigma < 0.0) throw std::runtime_error("raster: sigma must be > 0");
  if (!(dist_cutoff > 0.0))
    throw std::runtime_error("raster: dist_cutoff must be > 0");
}

SilhouetteImage render_soft_silhouette(const Points2& verts2d, const Faces& faces,
                                       const RasterSettings& settings) {
  settings.validate();
  if (!verts2d.allFinite())
    throw std::runtime_error("render_soft_silhouette: non-finite vertices");
  const double sigma = settings.effective_sigma();
  const double cutoff2 = settings.dist_cutoff * settings.dist_cutoff;

  // one_minus[p] accumulates prod_i (1 - D_i) in face index order.
  SilhouetteImage acc(settings.width, settings.height);
  std::fill(acc.values.begin(), acc.values.end(), 1.0);

  for (int f = 0; f < faces.rows(); ++f) {
    const Tri2 tri = make_tri(verts2d, faces, f);
    if (tri.degenerate()) continue;
    const Bounds b = tri_bounds(tri, settings.dist_cutoff, settings.width,
                                settings.height);
    for (int y = b.y0; y <= b.y1; ++y)
      for (int x = b.x0; x <= b.x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const bool inside = tri.contains(p);
        const double d2 = boundary_dist2(tri, p, nullptr, nullptr);
        if (!inside && d2 > cutoff2) continue;
        const double d = sigmoid((inside ? d2 : -d2) / sigma);
        acc.at(x, y) *= 1.0 - d;
      }
  }

  SilhouetteImage out(settings.width, settings.height);
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = 1.0 - acc.values[i];
  return out;
}

Points2 soft_silhouette_backward(const Points2& verts2d, const Faces& faces,
                                 const RasterSettings& settings,
                                 const SilhouetteImage& upstream) {
  settings.validate();
  if (upstream.width != settings.width || upstream.height != settings.height)
    throw std::runtime_error("soft_silhouette_backward: upstream size mismatch");
  const double sigma = settings.effective_sigma();
  const double cutoff2 = settings.dist_cutoff * settings.dist_cutoff;

  // Forward pass for the full per-pixel product.
  SilhouetteImage prod(settings.width, settings.height);
  std::fill(prod.values.begin(), prod.values.end(), 1.0);
  for (int f = 0; f < faces.rows(); ++f) {
    const Tri2 tri = make_tri(verts2d, faces, f);
    if (tri.degenerate()) continue;
    const Bounds b = tri_bounds(tri, settings.dist_cutoff, settings.width,
                                settings.height);
    for (int y = b.y0; y <= b.y1; ++y)
      for (int x = b.x0; x <= b.x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const bool inside = tri.contains(p);
        const double d2 = boundary_dist2(tri, p, nullptr, nullptr);
        if (!inside && d2 > cutoff2) continue;
        prod.at(x, y) *= 1.0 - sigmoid((inside ? d2 : -d2) / sigma);
      }
  }

  // dS/dD_i = prod_{j != i} (1 - D_j) = prod / (1 - D_i); combined with
  // dD/dz = D (1 - D), the (1 - D_i) factor cancels:
  //   dS/dz_i = prod * D_i.
  Points2 grad = Points2::Zero(verts2d.rows(), 2);
  for (int f = 0; f < faces.rows(); ++f) {
    const Tri2 tri = make_tri(verts2d, faces, f);
    if (tri.degenerate()) continue;
    const int ia = faces(f, 0), ib = faces(f, 1), ic = faces(f, 2);
    const Bounds b = tri_bounds(tri, settings.dist_cutoff, settings.width,
                                settings.height);
    for (int y = b.y0; y <= b.y1; ++y)
      for (int x = b.x0; x <= b.x1; ++x) {
        const double up = upstream.at(x, y);
        if (up == 0.0) continue;
        const Vec2 p(x + 0.5, y + 0.5);
        const bool inside = tri.contains(p);
        int edge = 0;
        double t = 0.0;
        const double d2 = boundary_dist2(tri, p, &edge, &t);
        if (!inside && d2 > cutoff2) continue;
        const double z = (inside ? d2 : -d2) / sigma;
        const double di = sigmoid(z);
        const double coeff = up * prod.at(x, y) * di * (inside ? 1.0 : -1.0) / sigma;
        if (coeff == 0.0 || d2 == 0.0) continue;

        // d(d^2)/d(endpoints) of the active edge, envelope rule on t.
        const int i0 = edge == 0 ? ia : edge == 1 ? ib : ic;
        const int i1 = edge == 0 ? ib : edge == 1 ? ic : ia;
        const Vec2 a = verts2d.row(i0);
        const Vec2 bb = verts2d.row(i1);
        const Vec2 closest = a + t * (bb - a);
        const Vec2 pc = p - closest;  // d(d^2)/d(closest) = -2 pc
        grad.row(i0) += coeff * (-2.0 * (1.0 - t)) * pc.transpose();
        grad.row(i1) += coeff * (-2.0 * t) * pc.transpose();
      }
  }
  return grad;
}

FragmentBuffer rasterize_fragments(const PosedMesh& mesh,
                                   const WeakPerspectiveCamera& cam, int width,
                                   int height) {
  if (width <= 0 || height <= 0)
    throw std::runtime_error("rasterize_fragments: bad dimensions");
  const Points2 verts2d = project(cam, mesh.vertices);
  FragmentBuffer buf(width, height);
  std::vector<double> zbuf(size_t(width) * height,
                           std::numeric_limits<double>::infinity());

  for (int f = 0; f < mesh.faces.rows(); ++f) {
    const Tri2 tri = make_tri(verts2d, mesh.faces, f);
    // Outward-CCW triangles facing the camera (which looks along +z with
    // y-down image axes) project with negative signed area; discard the rest.
    if (tri.area2 >= -1e-12) continue;
    const double za = mesh.vertices(mesh.faces(f, 0), 2);
    const double zb = mesh.vertices(mesh.faces(f, 1), 2);
    const double zc = mesh.vertices(mesh.faces(f, 2), 2);
    const Bounds b = tri_bounds(tri, 0.0, width, height);
    for (int y = b.y0; y <= b.y1; ++y)
      for (int x = b.x0; x <= b.x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const Vec2 pa = p - tri.a;
        const Vec2 e1 = tri.b - tri.a;
        const Vec2 e2 = tri.c - tri.a;
        const double w1 = (pa.x() * e2.y() - pa.y() * e2.x()) / tri.area2;
        const double w2 = (e1.x() * pa.y() - e1.y() * pa.x()) / tri.area2;
        const double w0 = 1.0 - w1 - w2;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double depth = w0 * za + w1 * zb + w2 * zc;
        const size_t idx = size_t(y) * width + x;
        if (depth < zbuf[idx]) {
          zbuf[idx] = depth;
          buf.fragments[idx] = Fragment{f, Vec3(w0, w1, w2), depth};
        }
      }
  }
  return buf;
}

}  // namespace handrefine
