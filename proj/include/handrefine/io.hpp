#pragma once

#include <string>
#include <vector>

#include "handrefine/hand_model.hpp"
#include "handrefine/metrics.hpp"
#include "handrefine/refine.hpp"
#include "handrefine/stereo.hpp"
#include "handrefine/texture.hpp"

namespace handrefine {

// Full run configuration; defaults reproduce the method constants
// (eta = 0.002, alpha = 0.9, lambda = (1, 1, 1, 1, 0.1)).
struct RunConfig {
  RefineConfig refine;
  double texture_beta = 0.7;
  bool slerp_blend = false;
};

// Model interchange format: JSON with keys `template`, `faces`,
// `shape_basis`, `joint_regressor`, `skin_weights`, `parents`,
// `fingertips`; optional `uv` and reserved `pose_basis`. Units: meters.
HandModelData load_model(const std::string& path);
void save_model(const HandModelData& model, const std::string& path);

// Params file: JSON {"pose": [...], "shape": [...],
//                    "camera": {"t": [tx, ty], "scale": delta}}.
HandParams load_params(const std::string& path);
void save_params(const HandParams& params, const std::string& path);

// Rig file: JSON {"rotation": 9 row-major, "translation": 3,
//                 "focal": f, "principal_point": [cx, cy]}.
StereoRig load_rig(const std::string& path);
void save_rig(const StereoRig& rig, const std::string& path);

// Stereo weights file: JSON {"w": [...]} with entries in [0, 1].
StereoWeights load_stereo_weights(const std::string& path);
void save_stereo_weights(const StereoWeights& w, const std::string& path);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& config, const std::string& path);

// Binary graymap (P5, maxval 255). Silhouettes store round(255 * S).
SilhouetteImage load_pgm(const std::string& path);
void save_pgm(const SilhouetteImage& image, const std::string& path);

// Binary pixmap (P6, maxval 255) for color images and texture maps.
RgbImage load_ppm(const std::string& path);
void save_ppm(const RgbImage& image, const std::string& path);

TextureMap load_texture(const std::string& path);         // reads <path> + .w.pgm
void save_texture(const TextureMap& tex, const std::string& path);

BinaryMask to_mask(const SilhouetteImage& image, double threshold = 0.5);

// Minimal Wavefront OBJ subset: `v`/`f` lines, 1-based indices, `vt` when
// an atlas is attached.
struct ObjMesh {
  Points3 vertices;
  Faces faces;
  std::vector<Vec2> uvs;          // optional
  Faces uv_faces;                 // per-face vt indices when uvs present
};
ObjMesh load_obj(const std::string& path);
void save_obj(const ObjMesh& mesh, const std::string& path);
void save_obj(const PosedMesh& mesh, const std::string& path,
              const UVAtlas* atlas = nullptr);

// Loss history CSV: iteration, sil, v, n, lap, edge, total.
void save_history_csv(const std::vector<LossBreakdown>& history,
                      const std::string& path);

}  // namespace handrefine
