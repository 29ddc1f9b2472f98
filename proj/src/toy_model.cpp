#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "handrefine/hand_model.hpp"

namespace handrefine {

namespace {

// Palm proportions, meters. Five fingers and six gap columns alternate
// along x on the +y face of the palm box; fingers extrude in +y.
constexpr double kPalmWidth = 0.080;
constexpr double kPalmLength = 0.080;
constexpr double kPalmHalfThick = 0.010;
constexpr double kFingerLength = 0.050;
constexpr int kColumns = 11;  // gap, finger, gap, ... (fingers at odd indices)

struct Builder {
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> tris;

  int add_vert(const Vec3& p) {
    verts.push_back(p);
    return static_cast<int>(verts.size()) - 1;
  }
  void tri(int a, int b, int c) { tris.emplace_back(a, b, c); }
  // Quad split into two triangles, corners in outward-CCW order.
  void quad(int a, int b, int c, int d) {
    tri(a, b, c);
    tri(a, c, d);
  }
};

double rms_scale(const Points3& b) {
  return std::sqrt(b.squaredNorm() / static_cast<double>(b.rows()));
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

HandModelData toy_model(unsigned seed, int finger_segments) {
  if (finger_segments < 2)
    throw std::runtime_error("toy_model: finger_segments must be >= 2");
  const int fs = finger_segments;

  Builder bld;
  const double colw = kPalmWidth / kColumns;
  const double h = kPalmHalfThick;

  // Palm rim grids: 12 x-positions, z in {-h, +h}, at y = 0 (knuckle edge)
  // and y = -kPalmLength (wrist edge).
  auto grid_id = [&](int edge, int xi, int zi) {  // edge 0 = knuckle, 1 = wrist
    return edge * 24 + xi * 2 + zi;               // zi 0 = -h, 1 = +h
  };
  for (int edge = 0; edge < 2; ++edge) {
    const double y = edge == 0 ? 0.0 : -kPalmLength;
    for (int xi = 0; xi <= kColumns; ++xi)
      for (int zi = 0; zi < 2; ++zi)
        bld.add_vert(Vec3(xi * colw, y, zi == 0 ? -h : h));
  }

  // Palm box walls. Outward normals: +z and -z strips, the two x ends, the
  // wrist face (-y), and gap quads on the knuckle face (+y).
  for (int xi = 0; xi < kColumns; ++xi) {
    // +z face (zi = 1): outward +z.
    bld.quad(grid_id(1, xi, 1), grid_id(1, xi + 1, 1), grid_id(0, xi + 1, 1),
             grid_id(0, xi, 1));
    // -z face: outward -z.
    bld.quad(grid_id(1, xi + 1, 0), grid_id(1, xi, 0), grid_id(0, xi, 0),
             grid_id(0, xi + 1, 0));
    // Wrist face (-y): outward -y.
    bld.quad(grid_id(1, xi, 0), grid_id(1, xi + 1, 0), grid_id(1, xi + 1, 1),
             grid_id(1, xi, 1));
    // Knuckle face (+y) gap quads only; finger columns stay open.
    if (xi % 2 == 0)
      bld.quad(grid_id(0, xi + 1, 0), grid_id(0, xi, 0), grid_id(0, xi, 1),
               grid_id(0, xi + 1, 1));
  }
  // x = 0 end: outward -x.   x = max end: outward +x.
  bld.quad(grid_id(1, 0, 0), grid_id(1, 0, 1), grid_id(0, 0, 1), grid_id(0, 0, 0));
  bld.quad(grid_id(1, kColumns, 1), grid_id(1, kColumns, 0),
           grid_id(0, kColumns, 0), grid_id(0, kColumns, 1));

  // Fingers: ring 0 is the open knuckle quad; fs new rings above; apex cap.
  HandModelData model;
  std::vector<int> tip_ids;
  std::vector<std::vector<std::array<int, 4>>> finger_rings;  // [finger][ring]
  for (int f = 0; f < 5; ++f) {
    const int xi = 2 * f + 1;
    std::vector<std::array<int, 4>> rings;
    // Ring corner order chosen so walls wind outward: -z front pair then +z.
    rings.push_back({grid_id(0, xi, 0), grid_id(0, xi + 1, 0),
                     grid_id(0, xi + 1, 1), grid_id(0, xi, 1)});
    for (int s = 1; s <= fs; ++s) {
      const double y = s * kFingerLength / fs;
      std::array<int, 4> ring{};
      ring[0] = bld.add_vert(Vec3(xi * colw, y, -h));
      ring[1] = bld.add_vert(Vec3((xi + 1) * colw, y, -h));
      ring[2] = bld.add_vert(Vec3((xi + 1) * colw, y, h));
      ring[3] = bld.add_vert(Vec3(xi * colw, y, h));
      const auto& prev = rings.back();
      for (int e = 0; e < 4; ++e) {
        const int e2 = (e + 1) % 4;
        bld.quad(prev[e2], prev[e], ring[e], ring[e2]);
      }
      rings.push_back(ring);
    }
    const int apex =
        bld.add_vert(Vec3((xi + 0.5) * colw, kFingerLength + colw, 0.0));
    const auto& top = rings.back();
    for (int e = 0; e < 4; ++e) bld.tri(top[(e + 1) % 4], top[e], apex);
    tip_ids.push_back(apex);
    finger_rings.push_back(std::move(rings));
  }

  const int nv = static_cast<int>(bld.verts.size());
  const int nf = static_cast<int>(bld.tris.size());
  model.template_vertices.resize(nv, 3);
  for (int i = 0; i < nv; ++i) model.template_vertices.row(i) = bld.verts[i];
  model.faces.resize(nf, 3);
  for (int i = 0; i < nf; ++i) model.faces.row(i) = bld.tris[i];
  for (int k = 0; k < 5; ++k) model.fingertip_vertex_ids[k] = tip_ids[k];

  // Kinematics: root at the wrist, then MCP/PIP/DIP per finger at ring
  // centers 0, 1, 2. Regressor rows average the defining vertices exactly.
  const int nj = 16;
  model.parents.assign(nj, -1);
  model.joint_regressor = MatX::Zero(nj, nv);
  for (int zi = 0; zi < 2; ++zi)
    for (int xi = 0; xi <= kColumns; ++xi)
      model.joint_regressor(0, grid_id(1, xi, zi)) = 1.0 / 24.0;
  for (int f = 0; f < 5; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int j = 1 + 3 * f + k;
      model.parents[j] = k == 0 ? 0 : j - 1;
      for (int c : finger_rings[f][k])
        model.joint_regressor(j, c) = 0.25;
    }
  }

  // Rest joints for skinning-weight construction.
  const Points3 rest = model.joint_regressor * model.template_vertices;

  // Bone segments: root spans the palm; MCP/PIP point at their child,
  // DIP at the fingertip.
  std::vector<std::pair<Vec3, Vec3>> bones(nj);
  bones[0] = {rest.row(0), Vec3(kPalmWidth / 2, 0.0, 0.0)};
  for (int f = 0; f < 5; ++f)
    for (int k = 0; k < 3; ++k) {
      const int j = 1 + 3 * f + k;
      const Vec3 a = rest.row(j);
      const Vec3 b = k < 2 ? Vec3(rest.row(j + 1))
                           : Vec3(model.template_vertices.row(tip_ids[f]));
      bones[j] = {a, b};
    }

  // Inverse squared distance to the two nearest bones, normalized.
  model.skin_weights = MatX::Zero(nv, nj);
  for (int v = 0; v < nv; ++v) {
    const Vec3 p = model.template_vertices.row(v);
    int best = -1, second = -1;
    double dbest = 0.0, dsecond = 0.0;
    for (int j = 0; j < nj; ++j) {
      const double d = segment_distance(p, bones[j].first, bones[j].second);
      if (best < 0 || d < dbest) {
        second = best; dsecond = dbest;
        best = j; dbest = d;
      } else if (second < 0 || d < dsecond) {
        second = j; dsecond = d;
      }
    }
    const double w1 = 1.0 / (dbest * dbest + 1e-8);
    const double w2 = 1.0 / (dsecond * dsecond + 1e-8);
    model.skin_weights(v, best) = w1 / (w1 + w2);
    model.skin_weights(v, second) = w2 / (w1 + w2);
  }

  // Shape basis: smooth random trigonometric displacement fields, made
  // mutually orthogonal, RMS vertex displacement 2 mm per unit coefficient.
  const int ns = 10;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  model.shape_basis.resize(ns);
  for (int k = 0; k < ns; ++k) {
    Points3 b = Points3::Zero(nv, 3);
    for (int wave = 0; wave < 3; ++wave) {
      Vec3 freq(uni(rng), uni(rng), uni(rng));
      freq *= 40.0;
      const Vec3 amp(uni(rng), uni(rng), uni(rng));
      const double phase = uni(rng) * 3.14159265358979323846;
      for (int v = 0; v < nv; ++v) {
        const double arg = freq.dot(model.template_vertices.row(v)) + phase;
        b.row(v) += (amp * std::sin(arg)).transpose();
      }
    }
    model.shape_basis[k] = b;
  }
  // Modified Gram-Schmidt, two passes.
  for (int pass = 0; pass < 2; ++pass)
    for (int k = 0; k < ns; ++k) {
      for (int j = 0; j < k; ++j) {
        const Points3& bj = model.shape_basis[j];
        const double proj = (model.shape_basis[k].array() * bj.array()).sum() /
                            bj.squaredNorm();
        model.shape_basis[k] -= proj * bj;
      }
    }
  for (int k = 0; k < ns; ++k)
    model.shape_basis[k] *= 0.002 / rms_scale(model.shape_basis[k]);

  model.validate();
  return model;
}

}  // namespace handrefine
