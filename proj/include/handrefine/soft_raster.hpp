#pragma once

#include <optional>
#include <vector>

#include "handrefine/camera.hpp"
#include "handrefine/hand_model.hpp"
#include "handrefine/types.hpp"

namespace handrefine {

// H x W grid of occupancy probabilities in [0, 1], row-major, pixel (x, y)
// at values[y * width + x]. Pixel centers sit at (x + 0.5, y + 0.5).
struct SilhouetteImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  SilhouetteImage() = default;
  SilhouetteImage(int w, int h) : width(w), height(h), values(size_t(w) * h, 0.0) {}
  double& at(int x, int y) { return values[size_t(y) * width + x]; }
  double at(int x, int y) const { return values[size_t(y) * width + x]; }
};

struct RasterSettings {
  int width = 64;
  int height = 64;
  // Softness in squared pixels; default scales with the image diagonal.
  double sigma = 0.0;
  double dist_cutoff = 8.0;

  double effective_sigma() const {
    return sigma > 0.0 ? sigma : 1e-5 * (double(width) * width + double(height) * height);
  }
  void validate() const;
};

// Hard rasterization output: nearest front-facing triangle per pixel.
struct Fragment {
  int face_id = -1;  // -1 = no coverage
  Vec3 barycentric{0, 0, 0};
  double depth = 0.0;
};

struct FragmentBuffer {
  int width = 0;
  int height = 0;
  std::vector<Fragment> fragments;

  FragmentBuffer() = default;
  FragmentBuffer(int w, int h) : width(w), height(h), fragments(size_t(w) * h) {}
  const Fragment& at(int x, int y) const { return fragments[size_t(y) * width + x]; }
  Fragment& at(int x, int y) { return fragments[size_t(y) * width + x]; }
};

// Probabilistic silhouette: per pixel p, each triangle contributes
// D_i = sigmoid(s_i d^2(p, boundary) / sigma) with s_i = +1 inside and -1
// outside; S(p) = 1 - prod_i (1 - D_i). Outside pixels farther than
// dist_cutoff from a triangle are skipped. Triangle reduction order is
// fixed by face index, so outputs are bit-deterministic.
SilhouetteImage render_soft_silhouette(const Points2& verts2d, const Faces& faces,
                                       const RasterSettings& settings);

// dL/d(verts2d) for upstream = dL/dS; exact chain rule through the
// aggregation, the sigmoid, and the point-to-triangle-boundary distance.
Points2 soft_silhouette_backward(const Points2& verts2d, const Faces& faces,
                                 const RasterSettings& settings,
                                 const SilhouetteImage& upstream);

// Hard z-buffer at pixel centers; smallest camera z wins; triangles that
// are back-facing after projection are discarded.
FragmentBuffer rasterize_fragments(const PosedMesh& mesh,
                                   const WeakPerspectiveCamera& cam, int width,
                                   int height);

}  // namespace handrefine
