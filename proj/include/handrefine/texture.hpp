#pragma once

#include <vector>

#include "handrefine/hand_model.hpp"
#include "handrefine/soft_raster.hpp"

namespace handrefine {

// Simple RGB raster, values in [0, 1], pixel (x, y) at y * width + x.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(size_t(w) * h, Vec3::Zero()) {}
  Vec3& at(int x, int y) { return pixels[size_t(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[size_t(y) * width + x]; }
};

// Per-face corner UVs in [0, 1]^2 plus the texel resolution they target.
struct UVAtlas {
  int resolution = 512;
  std::vector<std::array<Vec2, 3>> face_uvs;  // one entry per face
};

struct TextureMap {
  int resolution = 0;
  std::vector<Vec3> rgb;       // resolution^2, texel (u, v) at v * R + u
  std::vector<double> weight;  // observation confidence, 0 = never seen

  TextureMap() = default;
  explicit TextureMap(int r)
      : resolution(r), rgb(size_t(r) * r, Vec3::Zero()), weight(size_t(r) * r, 0.0) {}
};

// Loads stored per-face UVs when the model carries them (validating range
// and texel-level chart disjointness), otherwise packs one chart per face
// on a grid with a 2-texel gutter.
UVAtlas unwrap(const HandModelData& model, int resolution);

// Splats image colors through the fragment buffer into the nearest texel,
// averaging multiple hits; untouched texels keep weight 0.
TextureMap bake(const RgbImage& image, const PosedMesh& mesh,
                const WeakPerspectiveCamera& cam, const UVAtlas& atlas,
                const FragmentBuffer& frag);

// Exponential smoothing on observed texels: beta * prev + (1 - beta) * fresh;
// texels the fresh bake never saw carry the previous value through.
TextureMap ema_update(const TextureMap& prev, const TextureMap& fresh, double beta);

// Nearest-texel textured rendering through the hard rasterizer; background
// stays black. Used by the bake round trip and the CLI.
RgbImage render_textured(const PosedMesh& mesh, const WeakPerspectiveCamera& cam,
                         const UVAtlas& atlas, const TextureMap& texture,
                         int width, int height);

}  // namespace handrefine
