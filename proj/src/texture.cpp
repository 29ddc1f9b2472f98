#include "handrefine/texture.hpp"

#include <cmath>
#include <stdexcept>

namespace handrefine {

namespace {

int uv_to_texel(double u, int resolution) {
  const int t = static_cast<int>(std::floor(u * resolution));
  return std::clamp(t, 0, resolution - 1);
}

// Marks texels whose centers fall inside the chart triangle; throws when a
// texel is claimed twice.
void claim_chart(std::vector<char>& owner, int resolution,
                 const std::array<Vec2, 3>& uv) {
  const Vec2 a = uv[0] * resolution, b = uv[1] * resolution, c = uv[2] * resolution;
  const double area2 = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
  if (std::abs(area2) < 1e-12) return;
  const int x0 = std::max(0, int(std::floor(std::min({a.x(), b.x(), c.x()}))));
  const int x1 = std::min(resolution - 1, int(std::ceil(std::max({a.x(), b.x(), c.x()}))));
  const int y0 = std::max(0, int(std::floor(std::min({a.y(), b.y(), c.y()}))));
  const int y1 = std::min(resolution - 1, int(std::ceil(std::max({a.y(), b.y(), c.y()}))));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(x + 0.5, y + 0.5);
      const double w1 =
          ((p - a).x() * (c - a).y() - (p - a).y() * (c - a).x()) / area2;
      const double w2 =
          ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x()) / area2;
      if (w1 < 0.0 || w2 < 0.0 || w1 + w2 > 1.0) continue;
      char& cell = owner[size_t(y) * resolution + x];
      if (cell) throw std::runtime_error("unwrap: overlapping uv charts");
      cell = 1;
    }
}

}  // namespace

UVAtlas unwrap(const HandModelData& model, int resolution) {
  if (resolution < 8) throw std::runtime_error("unwrap: resolution too small");
  const int nf = model.num_faces();
  UVAtlas atlas;
  atlas.resolution = resolution;
  atlas.face_uvs.resize(nf);

  if (model.face_uvs.size() != 0) {
    for (int f = 0; f < nf; ++f)
      for (int k = 0; k < 3; ++k) {
        const double u = model.face_uvs(f, 2 * k);
        const double v = model.face_uvs(f, 2 * k + 1);
        if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0))
          throw std::runtime_error("unwrap: stored uv outside [0, 1]");
        atlas.face_uvs[f][k] = Vec2(u, v);
      }
  } else {
    // One right-triangle chart per face, packed row-major on a grid.
    const int grid = static_cast<int>(std::ceil(std::sqrt(double(nf))));
    const double cell = 1.0 / grid;
    const double gutter = 2.0 / resolution;
    if (cell <= 3.0 * gutter)
      throw std::runtime_error("unwrap: resolution too small for face count");
    for (int f = 0; f < nf; ++f) {
      const double x0 = (f % grid) * cell + gutter;
      const double y0 = (f / grid) * cell + gutter;
      const double x1 = (f % grid + 1) * cell - gutter;
      const double y1 = (f / grid + 1) * cell - gutter;
      atlas.face_uvs[f] = {Vec2(x0, y0), Vec2(x1, y0), Vec2(x0, y1)};
    }
  }

  std::vector<char> owner(size_t(resolution) * resolution, 0);
  for (int f = 0; f < nf; ++f) claim_chart(owner, resolution, atlas.face_uvs[f]);
  return atlas;
}

TextureMap bake(const RgbImage& image, const PosedMesh& mesh,
                const WeakPerspectiveCamera& cam, const UVAtlas& atlas,
                const FragmentBuffer& frag) {
  (void)cam;
  if (static_cast<int>(atlas.face_uvs.size()) != mesh.faces.rows())
    throw std::runtime_error("bake: atlas/face count mismatch");
  if (frag.width != image.width || frag.height != image.height)
    throw std::runtime_error("bake: fragment buffer/image size mismatch");

  const int r = atlas.resolution;
  TextureMap tex(r);
  std::vector<Vec3> sum(size_t(r) * r, Vec3::Zero());
  std::vector<double> count(size_t(r) * r, 0.0);

  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const Fragment& fr = frag.at(x, y);
      if (fr.face_id < 0) continue;
      const auto& uvs = atlas.face_uvs[fr.face_id];
      const Vec2 uv = fr.barycentric.x() * uvs[0] + fr.barycentric.y() * uvs[1] +
                      fr.barycentric.z() * uvs[2];
      const size_t idx =
          size_t(uv_to_texel(uv.y(), r)) * r + uv_to_texel(uv.x(), r);
      sum[idx] += image.at(x, y);
      count[idx] += 1.0;
    }

  for (size_t i = 0; i < sum.size(); ++i) {
    if (count[i] > 0.0) {
      tex.rgb[i] = sum[i] / count[i];
      tex.weight[i] = count[i];
    }
  }
  return tex;
}

TextureMap ema_update(const TextureMap& prev, const TextureMap& fresh, double beta) {
  if (prev.resolution != fresh.resolution)
    throw std::runtime_error("ema_update: resolution mismatch");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::runtime_error("ema_update: beta must be in [0, 1]");
  TextureMap out(prev.resolution);
  for (size_t i = 0; i < out.rgb.size(); ++i) {
    if (fresh.weight[i] > 0.0) {
      out.rgb[i] = beta * prev.rgb[i] + (1.0 - beta) * fresh.rgb[i];
    } else {
      out.rgb[i] = prev.rgb[i];
    }
    out.weight[i] = std::max(prev.weight[i], fresh.weight[i]);
  }
  return out;
}

RgbImage render_textured(const PosedMesh& mesh, const WeakPerspectiveCamera& cam,
                         const UVAtlas& atlas, const TextureMap& texture,
                         int width, int height) {
  if (static_cast<int>(atlas.face_uvs.size()) != mesh.faces.rows())
    throw std::runtime_error("render_textured: atlas/face count mismatch");
  const FragmentBuffer frag = rasterize_fragments(mesh, cam, width, height);
  const int r = texture.resolution;
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Fragment& fr = frag.at(x, y);
      if (fr.face_id < 0) continue;
      const auto& uvs = atlas.face_uvs[fr.face_id];
      const Vec2 uv = fr.barycentric.x() * uvs[0] + fr.barycentric.y() * uvs[1] +
                      fr.barycentric.z() * uvs[2];
      out.at(x, y) = texture.rgb[size_t(uv_to_texel(uv.y(), r)) * r +
                                 uv_to_texel(uv.x(), r)];
    }
  return out;
}

}  // namespace handrefine
