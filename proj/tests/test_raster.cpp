#include <doctest.h>

#include <random>

#include "handrefine/soft_raster.hpp"

using namespace handrefine;

namespace {

RasterSettings small_settings(double sigma = 0.0) {
  RasterSettings s;
  s.width = 32;
  s.height = 32;
  s.sigma = sigma;
  s.dist_cutoff = 8.0;
  return s;
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d0 = (b - a).x() * (p - a).y() - (b - a).y() * (p - a).x();
  const double d1 = (c - b).x() * (p - b).y() - (c - b).y() * (p - b).x();
  const double d2 = (a - c).x() * (p - c).y() - (a - c).y() * (p - c).x();
  const bool neg = d0 < 0 || d1 < 0 || d2 < 0;
  const bool pos = d0 > 0 || d1 > 0 || d2 > 0;
  return !(neg && pos);
}

double dist_to_edges(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  auto seg = [&](const Vec2& s, const Vec2& e) {
    const Vec2 d = e - s;
    const double t = std::clamp((p - s).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (p - (s + t * d)).norm();
  };
  return std::min({seg(a, b), seg(b, c), seg(c, a)});
}

}  // namespace

TEST_CASE("zero faces render to an all-zero image") {
  const Points2 verts(0, 2);
  const Faces faces(0, 3);
  const SilhouetteImage img = render_soft_silhouette(verts, faces, small_settings());
  for (double v : img.values) CHECK(v == 0.0);
}

TEST_CASE("a pixel exactly on a triangle edge gets D = 0.5") {
  Points2 verts(3, 2);
  // Edge x = 10.5 passes through the centers of column 10.
  verts << 10.5, 0.0, 10.5, 32.0, 30.0, 16.0;
  Faces faces(1, 3);
  faces << 0, 1, 2;
  const SilhouetteImage img = render_soft_silhouette(verts, faces, small_settings());
  CHECK(img.at(10, 16) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sharp sigma matches the point-in-triangle oracle away from edges") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> uni(2.0, 30.0);
  const RasterSettings s = small_settings(1e-4);
  for (int scene = 0; scene < 20; ++scene) {
    Points2 verts(3, 2);
    for (int i = 0; i < 3; ++i) verts.row(i) << uni(rng), uni(rng);
    Faces faces(1, 3);
    faces << 0, 1, 2;
    const SilhouetteImage img = render_soft_silhouette(verts, faces, s);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const Vec2 a = verts.row(0), b = verts.row(1), c = verts.row(2);
        if (dist_to_edges(p, a, b, c) < 1.0) continue;
        const double expected = point_in_triangle(p, a, b, c) ? 1.0 : 0.0;
        CHECK(img.at(x, y) == doctest::Approx(expected).epsilon(1e-9));
      }
  }
}

TEST_CASE("backward: zero upstream gives zero gradient") {
  Points2 verts(3, 2);
  verts << 5, 5, 20, 8, 12, 25;
  Faces faces(1, 3);
  faces << 0, 1, 2;
  const SilhouetteImage upstream(32, 32);
  const Points2 g = soft_silhouette_backward(verts, faces, small_settings(), upstream);
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward matches central finite differences") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(4.0, 28.0);
  std::uniform_real_distribution<double> w_uni(-1.0, 1.0);

  for (double sigma_scale : {1e-2, 1e-4}) {
    const double diag2 = 32.0 * 32.0 * 2.0;
    const RasterSettings s = small_settings(sigma_scale * diag2);
    for (int scene = 0; scene < 6; ++scene) {
      const int ntri = 1 + scene % 4;
      Points2 verts(3 * ntri, 2);
      Faces faces(ntri, 3);
      for (int t = 0; t < ntri; ++t) {
        for (int i = 0; i < 3; ++i) verts.row(3 * t + i) << uni(rng), uni(rng);
        faces.row(t) << 3 * t, 3 * t + 1, 3 * t + 2;
      }
      SilhouetteImage upstream(s.width, s.height);
      for (double& v : upstream.values) v = w_uni(rng);

      auto objective = [&](const Points2& v2) {
        const SilhouetteImage img = render_soft_silhouette(v2, faces, s);
        double acc = 0.0;
        for (size_t i = 0; i < img.values.size(); ++i)
          acc += img.values[i] * upstream.values[i];
        return acc;
      };

      const Points2 analytic = soft_silhouette_backward(verts, faces, s, upstream);
      const double h = 1e-4;
      int checked = 0;
      for (int v = 0; v < verts.rows(); ++v)
        for (int k = 0; k < 2; ++k) {
          Points2 hi = verts, lo = verts;
          hi(v, k) += h;
          lo(v, k) -= h;
          const double fd = (objective(hi) - objective(lo)) / (2.0 * h);
          const double ref = std::max(std::abs(fd), std::abs(analytic(v, k)));
          if (ref < 1e-8) continue;
          // Skip entries that straddle a nearest-feature switchover.
          if (std::abs(analytic(v, k) - fd) / ref > 1e-3) {
            Points2 hi2 = verts, lo2 = verts;
            hi2(v, k) += 10 * h;
            lo2(v, k) -= 10 * h;
            const double fd2 = (objective(hi2) - objective(lo2)) / (20.0 * h);
            if (std::abs(fd2 - fd) / ref > 1e-3) continue;  // non-smooth point
          }
          CHECK(std::abs(analytic(v, k) - fd) / ref < 1e-3);
          ++checked;
        }
      CHECK(checked > 0);
    }
  }
}

TEST_CASE("translating vertices and grid together leaves the image invariant") {
  Points2 verts(3, 2);
  verts << 6.25, 7.5, 22.0, 9.0, 14.0, 24.5;
  Faces faces(1, 3);
  faces << 0, 1, 2;
  const RasterSettings s = small_settings();
  const SilhouetteImage base = render_soft_silhouette(verts, faces, s);
  // Integer pixel shift: same values, shifted.
  Points2 moved = verts;
  moved.col(0).array() += 3.0;
  moved.col(1).array() += 2.0;
  const SilhouetteImage shifted = render_soft_silhouette(moved, faces, s);
  for (int y = 0; y < s.height - 2; ++y)
    for (int x = 0; x < s.width - 3; ++x)
      CHECK(shifted.at(x + 3, y + 2) == doctest::Approx(base.at(x, y)).epsilon(1e-12));
}

TEST_CASE("adding a triangle never decreases any pixel") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> uni(0.0, 32.0);
  Points2 verts(6, 2);
  for (int i = 0; i < 6; ++i) verts.row(i) << uni(rng), uni(rng);
  Faces one(1, 3), two(2, 3);
  one << 0, 1, 2;
  two << 0, 1, 2, 3, 4, 5;
  const RasterSettings s = small_settings();
  const SilhouetteImage a = render_soft_silhouette(verts, one, s);
  const SilhouetteImage b = render_soft_silhouette(verts, two, s);
  for (size_t i = 0; i < a.values.size(); ++i) {
    CHECK(b.values[i] >= a.values[i]);
    CHECK(b.values[i] >= 0.0);
    CHECK(b.values[i] <= 1.0);
  }
}

TEST_CASE("render is bit-deterministic") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> uni(0.0, 32.0);
  Points2 verts(12, 2);
  for (int i = 0; i < 12; ++i) verts.row(i) << uni(rng), uni(rng);
  Faces faces(4, 3);
  for (int t = 0; t < 4; ++t) faces.row(t) << 3 * t, 3 * t + 1, 3 * t + 2;
  const SilhouetteImage a = render_soft_silhouette(verts, faces, small_settings());
  const SilhouetteImage b = render_soft_silhouette(verts, faces, small_settings());
  CHECK(a.values == b.values);
}

TEST_CASE("fragment rasterization depth test and coverage") {
  PosedMesh mesh;
  mesh.vertices.resize(6, 3);
  // Two stacked triangles covering pixel (8, 8); front-facing needs
  // negative signed area in image coordinates.
  mesh.vertices << 2, 2, 2.0, 2, 14, 2.0, 14, 2, 2.0,  // z = 2
      2, 2, 1.0, 2, 14, 1.0, 14, 2, 1.0;               // z = 1
  mesh.faces.resize(2, 3);
  mesh.faces << 0, 1, 2, 3, 4, 5;
  WeakPerspectiveCamera cam;
  cam.delta = 1.0;

  const FragmentBuffer buf = rasterize_fragments(mesh, cam, 32, 32);
  CHECK(buf.at(4, 4).face_id == 1);
  CHECK(buf.at(4, 4).depth == doctest::Approx(1.0));
  CHECK(buf.at(30, 30).face_id == -1);

  // Barycentric recombination reproduces the pixel center.
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const Fragment& fr = buf.at(x, y);
      if (fr.face_id < 0) continue;
      Vec2 recon = Vec2::Zero();
      double bary_sum = 0.0;
      for (int k = 0; k < 3; ++k) {
        const Vec3 v = mesh.vertices.row(mesh.faces(fr.face_id, k));
        recon += fr.barycentric[k] * Vec2(v.x(), v.y());
        bary_sum += fr.barycentric[k];
        CHECK(fr.barycentric[k] >= 0.0);
      }
      CHECK(bary_sum == doctest::Approx(1.0).epsilon(1e-6));
      CHECK((recon - Vec2(x + 0.5, y + 0.5)).norm() < 1e-6);
    }
}

TEST_CASE("back-facing triangles are discarded") {
  PosedMesh mesh;
  mesh.vertices.resize(3, 3);
  mesh.vertices << 2, 2, 1.0, 14, 2, 1.0, 2, 14, 1.0;  // positive area = back-facing
  mesh.faces.resize(1, 3);
  mesh.faces << 0, 1, 2;
  WeakPerspectiveCamera cam;
  cam.delta = 1.0;
  const FragmentBuffer buf = rasterize_fragments(mesh, cam, 32, 32);
  for (const Fragment& fr : buf.fragments) CHECK(fr.face_id == -1);
}
