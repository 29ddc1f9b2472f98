#include <doctest.h>

#include "handrefine/refine.hpp"
#include "test_helpers.hpp"

using namespace handrefine;
using handrefine::testing::centered_params;

namespace {

struct Scene {
  HandModelData model;
  HandParams params;
  std::vector<LossView> views;
  RefineConfig config;
};

Scene make_scene(int iterations) {
  Scene s;
  s.model = toy_model(11, 2);
  s.config.iterations = iterations;
  s.config.raster.width = 48;
  s.config.raster.height = 48;
  s.params = centered_params(s.model, 48, 48);

  HandParams target = s.params;
  target.pose(3) += 0.2;
  target.pose(6) -= 0.1;
  const PosedMesh posed = forward(s.model, target.pose, target.shape);
  LossView view;
  view.target = render_soft_silhouette(project(target.camera, posed.vertices),
                                       posed.faces, s.config.raster);
  view.camera = s.params.camera;
  s.views = {view};
  return s;
}

bool offsets_equal(const ParamOffsets& a, const ParamOffsets& b) {
  return a.d_pose == b.d_pose && a.d_shape == b.d_shape &&
         a.d_vertices == b.d_vertices && a.d_camera == b.d_camera;
}

}  // namespace

TEST_CASE("init_state starts from zero offsets and velocity") {
  const HandModelData model = toy_model(5, 2);
  const RefineState st = init_state(model);
  CHECK(st.iteration == 0);
  CHECK(st.history.empty());
  CHECK(st.offsets.d_vertices.cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.offsets.d_pose.cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.offsets.d_shape.size() == model.num_shapes());
  CHECK(st.velocity.d_camera == Vec3::Zero());
}

TEST_CASE("zero iterations returns the unrefined forward pass") {
  Scene s = make_scene(0);
  const RefineResult r = refine(s.model, s.params, s.views, s.config);
  CHECK(r.state.iteration == 0);
  CHECK(r.state.history.size() == 1);  // initial loss only
  CHECK(r.offsets.d_vertices.cwiseAbs().maxCoeff() == 0.0);
  const PosedMesh plain = forward(s.model, s.params.pose, s.params.shape);
  CHECK(r.mesh.vertices == plain.vertices);
}

TEST_CASE("the first step is a plain gradient step") {
  Scene s = make_scene(1);
  const ParamOffsets g = loss_gradient(s.model, s.params,
                                       ParamOffsets::zeros(s.model), s.views,
                                       s.config.weights, s.config.raster);
  const RefineResult r = refine(s.model, s.params, s.views, s.config);
  // v1 = eta g, offsets = -eta g.
  CHECK((r.offsets.d_vertices + s.config.eta * g.d_vertices).cwiseAbs().maxCoeff() <
        1e-15);
  CHECK((r.offsets.d_pose + s.config.eta * g.d_pose).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((r.offsets.d_camera + s.config.eta * g.d_camera).cwiseAbs().maxCoeff() <
        1e-15);
}

TEST_CASE("two steps match a hand-unrolled momentum update") {
  Scene s = make_scene(2);
  const RefineResult r = refine(s.model, s.params, s.views, s.config);

  ParamOffsets offsets = ParamOffsets::zeros(s.model);
  ParamOffsets velocity = ParamOffsets::zeros(s.model);
  for (int it = 0; it < 2; ++it) {
    const ParamOffsets g = loss_gradient(s.model, s.params, offsets, s.views,
                                         s.config.weights, s.config.raster);
    velocity.d_pose = s.config.alpha * velocity.d_pose + s.config.eta * g.d_pose;
    velocity.d_shape = s.config.alpha * velocity.d_shape + s.config.eta * g.d_shape;
    velocity.d_vertices =
        s.config.alpha * velocity.d_vertices + s.config.eta * g.d_vertices;
    velocity.d_camera =
        s.config.alpha * velocity.d_camera + s.config.eta * g.d_camera;
    offsets.d_pose -= velocity.d_pose;
    offsets.d_shape -= velocity.d_shape;
    offsets.d_vertices -= velocity.d_vertices;
    offsets.d_camera -= velocity.d_camera;
  }
  CHECK((r.offsets.d_vertices - offsets.d_vertices).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((r.offsets.d_pose - offsets.d_pose).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((r.offsets.d_camera - offsets.d_camera).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("alpha = 0 reduces to plain gradient descent") {
  Scene s = make_scene(3);
  s.config.alpha = 0.0;
  const RefineResult r = refine(s.model, s.params, s.views, s.config);

  ParamOffsets offsets = ParamOffsets::zeros(s.model);
  for (int it = 0; it < 3; ++it) {
    const ParamOffsets g = loss_gradient(s.model, s.params, offsets, s.views,
                                         s.config.weights, s.config.raster);
    offsets.d_pose -= s.config.eta * g.d_pose;
    offsets.d_shape -= s.config.eta * g.d_shape;
    offsets.d_vertices -= s.config.eta * g.d_vertices;
    offsets.d_camera -= s.config.eta * g.d_camera;
  }
  CHECK((r.offsets.d_vertices - offsets.d_vertices).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((r.offsets.d_pose - offsets.d_pose).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("history holds the initial loss plus one entry per iteration") {
  Scene s = make_scene(6);
  const RefineResult r = refine(s.model, s.params, s.views, s.config);
  CHECK(r.state.history.size() == 7);
  CHECK(r.state.iteration == 6);
  for (const LossBreakdown& b : r.state.history) {
    CHECK(std::isfinite(b.total));
    CHECK(b.total >= 0.0);
  }
}

TEST_CASE("silhouette-only descent from the optimum stays at the optimum") {
  Scene s = make_scene(5);
  // Target rendered from the exact initial parameters; with only the
  // image term active the start is already a minimum.
  const PosedMesh posed = forward(s.model, s.params.pose, s.params.shape);
  s.views[0].target = render_soft_silhouette(
      project(s.params.camera, posed.vertices), posed.faces, s.config.raster);
  s.config.weights.lambda2 = 0.0;
  s.config.weights.lambda3 = 0.0;
  s.config.weights.lambda4 = 0.0;
  s.config.weights.lambda5 = 0.0;
  const RefineResult r = refine(s.model, s.params, s.views, s.config);
  for (size_t i = 1; i < r.state.history.size(); ++i)
    CHECK(r.state.history[i].total <= r.state.history[i - 1].total + 1e-12);
  CHECK(r.state.history.back().total <= r.state.history.front().total);
}

TEST_CASE("refinement is deterministic") {
  Scene s = make_scene(4);
  const RefineResult a = refine(s.model, s.params, s.views, s.config);
  const RefineResult b = refine(s.model, s.params, s.views, s.config);
  CHECK(offsets_equal(a.offsets, b.offsets));
  CHECK(a.mesh.vertices == b.mesh.vertices);
  for (size_t i = 0; i < a.state.history.size(); ++i)
    CHECK(a.state.history[i].total == b.state.history[i].total);
}

TEST_CASE("warm start carries offsets and velocity between calls") {
  Scene s = make_scene(2);
  s.config.warm_start = true;
  RefineState carry = init_state(s.model);
  refine(s.model, s.params, s.views, s.config, &carry);
  const ParamOffsets after_first = carry.offsets;
  CHECK(carry.iteration == 2);
  refine(s.model, s.params, s.views, s.config, &carry);
  CHECK(!offsets_equal(carry.offsets, after_first));

  // One 4-iteration run equals two warm-started 2-iteration runs.
  Scene s4 = make_scene(4);
  const RefineResult straight = refine(s4.model, s4.params, s4.views, s4.config);
  CHECK((straight.offsets.d_vertices - carry.offsets.d_vertices)
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}
