#pragma once

#include <vector>

#include "handrefine/loss.hpp"

namespace handrefine {

struct RefineConfig {
  double eta = 0.002;   // SGD learning rate
  double alpha = 0.9;   // momentum
  int iterations = 15;
  LossWeights weights;
  RasterSettings raster;
  bool warm_start = false;  // keep offsets across refine() calls (video use)
};

struct RefineState {
  ParamOffsets offsets;
  ParamOffsets velocity;
  int iteration = 0;
  std::vector<LossBreakdown> history;
};

struct RefineResult {
  PosedMesh mesh;
  HandParams params;     // p + dp, s + ds, c + dc
  ParamOffsets offsets;  // includes dv
  RefineState state;
};

RefineState init_state(const HandModelData& model);

// One SGD-with-momentum step: v <- alpha v + eta g; offsets <- offsets - v.
// Appends the post-step loss to the history. Throws with the name of the
// first non-finite gradient block.
void refine_step(RefineState& state, const HandModelData& model,
                 const HandParams& params, const std::vector<LossView>& views,
                 const RefineConfig& config);

RefineResult refine(const HandModelData& model, const HandParams& params,
                    const std::vector<LossView>& views, const RefineConfig& config,
                    RefineState* carry_state = nullptr);

}  // namespace handrefine
