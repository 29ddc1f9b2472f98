// Command-line surface: toygen, render, refine, stereo-refine, bake,
// eval, eval-mask. Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "handrefine/io.hpp"

namespace {

using namespace handrefine;

RasterSettings settings_from(const RunConfig& config, int width, int height,
                             double sigma, double cutoff) {
  RasterSettings s = config.refine.raster;
  if (width > 0) s.width = width;
  if (height > 0) s.height = height;
  if (sigma > 0.0) s.sigma = sigma;
  if (cutoff > 0.0) s.dist_cutoff = cutoff;
  return s;
}

SilhouetteImage render_view(const HandModelData& model, const HandParams& params,
                            const RasterSettings& settings) {
  const PosedMesh mesh = forward(model, params.pose, params.shape);
  const Points2 verts2d = project(params.camera, mesh.vertices);
  return render_soft_silhouette(verts2d, model.faces, settings);
}

void print_metric(const char* name, double value) {
  std::printf("%s=%.6f\n", name, value);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric hand mesh refinement, stereo fusion and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration")
      ->configurable(false);

  // toygen
  auto* toygen = app.add_subcommand("toygen", "Generate a procedural toy hand model");
  unsigned seed = 42;
  int segments = 3;
  std::string out_path;
  toygen->add_option("--seed", seed, "RNG seed");
  toygen->add_option("--segments", segments, "Finger segments (>= 2)");
  toygen->add_option("-o,--output", out_path, "Output model file")->required();

  // render
  auto* render = app.add_subcommand("render", "Render a soft silhouette (P5)");
  std::string model_path, params_path;
  int width = 0, height = 0;
  double sigma = 0.0, cutoff = 0.0;
  render->add_option("--model", model_path, "Model file")->required();
  render->add_option("--params", params_path, "Params file")->required();
  render->add_option("--width", width, "Image width");
  render->add_option("--height", height, "Image height");
  render->add_option("--sigma", sigma, "Softness (px^2)");
  render->add_option("--cutoff", cutoff, "Distance cutoff (px)");
  render->add_option("-o,--output", out_path, "Output P5 file")->required();

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Monocular test-time refinement");
  std::string target_path, mesh_path, history_path;
  int iters = -1;
  refine_cmd->add_option("--model", model_path, "Model file")->required();
  refine_cmd->add_option("--params", params_path, "Initial params")->required();
  refine_cmd->add_option("--target", target_path, "Target silhouette (P5)")->required();
  refine_cmd->add_option("--iters", iters, "Iteration count override");
  refine_cmd->add_option("--width", width, "Render width");
  refine_cmd->add_option("--height", height, "Render height");
  refine_cmd->add_option("-o,--output", out_path, "Refined params output")->required();
  refine_cmd->add_option("--mesh", mesh_path, "Refined mesh OBJ output");
  refine_cmd->add_option("--history", history_path, "Loss history CSV output");

  // stereo-refine
  auto* stereo_cmd =
      app.add_subcommand("stereo-refine", "Stereo fusion plus refinement");
  std::string params_left_path, rig_path, weights_path, target_left_path;
  bool heuristic = false;
  stereo_cmd->add_option("--model", model_path, "Model file")->required();
  stereo_cmd->add_option("--params-right", params_path, "Right-view params")->required();
  stereo_cmd->add_option("--params-left", params_left_path, "Left-view params")->required();
  stereo_cmd->add_option("--rig", rig_path, "Stereo rig file")->required();
  stereo_cmd->add_option("--target-right", target_path, "Right silhouette")->required();
  stereo_cmd->add_option("--target-left", target_left_path, "Left silhouette")->required();
  auto* wopt = stereo_cmd->add_option("--weights", weights_path, "Stereo weights file");
  stereo_cmd->add_flag("--heuristic", heuristic, "Visibility-based weights")
      ->excludes(wopt);
  stereo_cmd->add_option("--iters", iters, "Iteration count override");
  stereo_cmd->add_option("-o,--output", out_path, "Refined params output")->required();
  stereo_cmd->add_option("--mesh", mesh_path, "Refined mesh OBJ output");
  stereo_cmd->add_option("--history", history_path, "Loss history CSV output");

  // bake
  auto* bake_cmd = app.add_subcommand("bake", "Bake a camera image into a texture");
  std::string image_path, prev_path;
  double beta = -1.0;
  int resolution = 512;
  bake_cmd->add_option("--model", model_path, "Model file")->required();
  bake_cmd->add_option("--params", params_path, "Params file")->required();
  bake_cmd->add_option("--image", image_path, "Camera image (P6)")->required();
  bake_cmd->add_option("--prev", prev_path, "Previous texture for EMA");
  bake_cmd->add_option("--beta", beta, "EMA smoothing factor");
  bake_cmd->add_option("--resolution", resolution, "Texture resolution");
  bake_cmd->add_option("-o,--output", out_path, "Texture output (P6 + .w.pgm)")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Point-set metrics between two meshes");
  std::string pred_path, gt_path;
  bool aligned = false;
  double threshold_mm = 5.0, max_threshold_mm = 50.0;
  int steps = 100;
  eval_cmd->add_option("--pred", pred_path, "Predicted mesh OBJ")->required();
  eval_cmd->add_option("--gt", gt_path, "Groundtruth mesh OBJ")->required();
  eval_cmd->add_flag("--aligned", aligned, "Procrustes-align before MPVE");
  eval_cmd->add_option("--threshold", threshold_mm, "F-score threshold (mm)");
  eval_cmd->add_option("--max-threshold", max_threshold_mm, "PCK AUC range (mm)");
  eval_cmd->add_option("--steps", steps, "PCK AUC samples");

  // eval-mask
  auto* mask_cmd = app.add_subcommand("eval-mask", "IoU and pixel accuracy");
  std::string mask_a_path, mask_b_path;
  mask_cmd->add_option("--a", mask_a_path, "First mask (P5)")->required();
  mask_cmd->add_option("--b", mask_b_path, "Second mask (P5)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    if (iters >= 0) config.refine.iterations = iters;

    if (*toygen) {
      save_model(toy_model(seed, segments), out_path);
    } else if (*render) {
      const HandModelData model = load_model(model_path);
      const HandParams params = load_params(params_path);
      const RasterSettings s = settings_from(config, width, height, sigma, cutoff);
      save_pgm(render_view(model, params, s), out_path);
    } else if (*refine_cmd) {
      const HandModelData model = load_model(model_path);
      const HandParams params = load_params(params_path);
      LossView view;
      view.target = load_pgm(target_path);
      view.camera = params.camera;
      config.refine.raster.width = view.target.width;
      config.refine.raster.height = view.target.height;
      if (width > 0) config.refine.raster.width = width;
      if (height > 0) config.refine.raster.height = height;
      const RefineResult result = refine(model, params, {view}, config.refine);
      save_params(result.params, out_path);
      if (!mesh_path.empty()) save_obj(result.mesh, mesh_path);
      if (!history_path.empty()) save_history_csv(result.state.history, history_path);
    } else if (*stereo_cmd) {
      const HandModelData model = load_model(model_path);
      const HandParams right = load_params(params_path);
      const HandParams left = load_params(params_left_path);
      const StereoRig rig = load_rig(rig_path);

      LossView right_view, left_view;
      right_view.target = load_pgm(target_path);
      left_view.target = load_pgm(target_left_path);
      if (right_view.target.width != left_view.target.width ||
          right_view.target.height != left_view.target.height)
        throw std::runtime_error("stereo-refine: target sizes differ");

      StereoWeights weights;
      if (heuristic) {
        // Visibility from each view's own prediction.
        const PosedMesh mesh_r = forward(model, right.pose, right.shape);
        const PosedMesh mesh_l = forward(model, left.pose, left.shape);
        const int w = right_view.target.width, h = right_view.target.height;
        weights = heuristic_weights(
            rasterize_fragments(mesh_r, right.camera, w, h),
            rasterize_fragments(mesh_l, left.camera, w, h),
            project(right.camera, mesh_r.vertices),
            project(left.camera, mesh_l.vertices), model,
            default_joint_vertex_map(model));
      } else if (!weights_path.empty()) {
        weights = load_stereo_weights(weights_path);
      } else {
        throw CLI::ValidationError("stereo-refine",
                                   "either --weights or --heuristic is required");
      }

      const HandParams fused =
          fuse_prediction({right, ViewSide::kRight}, {left, ViewSide::kLeft},
                          weights, rig, config.slerp_blend);

      right_view.camera = fused.camera;
      left_view.camera = left.camera;
      // Mesh lives in the right camera frame; the left view sees it
      // through the inverse rig transform.
      left_view.view_rotation = rig.rotation.transpose();
      left_view.view_translation = -(rig.rotation.transpose() * rig.translation);

      config.refine.raster.width = right_view.target.width;
      config.refine.raster.height = right_view.target.height;
      const RefineResult result =
          refine(model, fused, {right_view, left_view}, config.refine);
      save_params(result.params, out_path);
      if (!mesh_path.empty()) save_obj(result.mesh, mesh_path);
      if (!history_path.empty()) save_history_csv(result.state.history, history_path);
    } else if (*bake_cmd) {
      const HandModelData model = load_model(model_path);
      const HandParams params = load_params(params_path);
      const RgbImage image = load_ppm(image_path);
      const PosedMesh mesh = forward(model, params.pose, params.shape);
      const UVAtlas atlas = unwrap(model, resolution);
      const FragmentBuffer frag =
          rasterize_fragments(mesh, params.camera, image.width, image.height);
      TextureMap tex = bake(image, mesh, params.camera, atlas, frag);
      if (!prev_path.empty()) {
        const TextureMap prev = load_texture(prev_path);
        const double b = beta >= 0.0 ? beta : config.texture_beta;
        tex = ema_update(prev, tex, b);
      }
      save_texture(tex, out_path);
    } else if (*eval_cmd) {
      const ObjMesh pred = load_obj(pred_path);
      const ObjMesh gt = load_obj(gt_path);
      print_metric("mpve", mpve(pred.vertices, gt.vertices, aligned));
      print_metric("fscore", fscore(pred.vertices, gt.vertices, threshold_mm));
      print_metric("pck_auc",
                   pck_auc(pred.vertices, gt.vertices, max_threshold_mm, steps));
    } else if (*mask_cmd) {
      const BinaryMask a = to_mask(load_pgm(mask_a_path));
      const BinaryMask b = to_mask(load_pgm(mask_b_path));
      print_metric("iou", mask_iou(a, b));
      print_metric("pixel_accuracy", pixel_accuracy(a, b));
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
