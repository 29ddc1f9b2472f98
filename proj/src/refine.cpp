#include "handrefine/refine.hpp"

#include <stdexcept>

namespace handrefine {

RefineState init_state(const HandModelData& model) {
  RefineState state;
  state.offsets = ParamOffsets::zeros(model);
  state.velocity = ParamOffsets::zeros(model);
  return state;
}

void refine_step(RefineState& state, const HandModelData& model,
                 const HandParams& params, const std::vector<LossView>& views,
                 const RefineConfig& config) {
  const ParamOffsets g = loss_gradient(model, params, state.offsets, views,
                                       config.weights, config.raster);
  if (!g.d_pose.allFinite())
    throw std::runtime_error("refine_step: non-finite gradient in d_pose");
  if (!g.d_shape.allFinite())
    throw std::runtime_error("refine_step: non-finite gradient in d_shape");
  if (!g.d_vertices.allFinite())
    throw std::runtime_error("refine_step: non-finite gradient in d_vertices");
  if (!g.d_camera.allFinite())
    throw std::runtime_error("refine_step: non-finite gradient in d_camera");

  state.velocity.d_pose = config.alpha * state.velocity.d_pose + config.eta * g.d_pose;
  state.velocity.d_shape = config.alpha * state.velocity.d_shape + config.eta * g.d_shape;
  state.velocity.d_vertices =
      config.alpha * state.velocity.d_vertices + config.eta * g.d_vertices;
  state.velocity.d_camera =
      config.alpha * state.velocity.d_camera + config.eta * g.d_camera;

  state.offsets.d_pose -= state.velocity.d_pose;
  state.offsets.d_shape -= state.velocity.d_shape;
  state.offsets.d_vertices -= state.velocity.d_vertices;
  state.offsets.d_camera -= state.velocity.d_camera;

  ++state.iteration;
  state.history.push_back(total_loss(model, params, state.offsets, views,
                                     config.weights, config.raster));
}

RefineResult refine(const HandModelData& model, const HandParams& params,
                    const std::vector<LossView>& views, const RefineConfig& config,
                    RefineState* carry_state) {
  if (config.iterations < 0)
    throw std::runtime_error("refine: iterations must be >= 0");

  RefineState state;
  if (config.warm_start && carry_state) {
    state = *carry_state;
  } else {
    state = init_state(model);
  }
  state.history.clear();
  state.iteration = 0;
  state.history.push_back(total_loss(model, params, state.offsets, views,
                                     config.weights, config.raster));
  for (int i = 0; i < config.iterations; ++i)
    refine_step(state, model, params, views, config);

  RefineResult result;
  result.mesh = apply_offsets(model, params, state.offsets);
  result.params.pose = params.pose + state.offsets.d_pose;
  result.params.shape = params.shape + state.offsets.d_shape;
  result.params.camera = params.camera;
  result.params.camera.t += state.offsets.d_camera.head<2>();
  result.params.camera.delta += state.offsets.d_camera.z();
  result.offsets = state.offsets;
  if (carry_state) *carry_state = state;
  result.state = std::move(state);
  return result;
}

}  // namespace handrefine
