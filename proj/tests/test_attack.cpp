#include <cmath>

#include "doctest.h"
#include "ssat/attack.hpp"
#include "ssat/error.hpp"
#include "ssat/metrics.hpp"
#include "ssat/scenario.hpp"

using namespace ssat;
using attack::AttackConfig;
using attack::AttackType;
using attack::Kind;

namespace
{

// Copies history waypoints into the future cyclically: future[t] = hist[t % H].
struct PassThrough final : FuturePredictor
{
  ad::Index future_on_tape(ad::Tape & t, const Scene &, ad::Index h) const override
  {
    std::vector<ad::Index> parts;
    parts.reserve(kFutureLen);
    for (int i = 0; i < kFutureLen; ++i) {
      parts.push_back(t.slice(h, 2 * (i % kHistoryLen), 2));
    }
    return t.concat(parts);
  }
};

struct ConstantModel final : FuturePredictor
{
  Trajectory fixed;

  ad::Index future_on_tape(ad::Tape & t, const Scene &, ad::Index) const override
  {
    return t.constant(to_flat(fixed));
  }
};

// Straight-moving scene whose ground truth is the cyclic copy of the history
// shifted by `c`: the pass-through model's benign objective is |c| and the
// optimum inside a unit ball is |c| + 1 with every waypoint saturated.
Scene pass_through_scene(const Waypoint & c)
{
  Scene scene;
  scene.scene_id = "toy";
  scene.target_id = 0;
  Agent agent;
  agent.id = 0;
  for (int f = 0; f < kHistoryLen; ++f) {
    agent.history.points.push_back({0.8 * f, 0.0});
  }
  for (int f = 0; f < kFutureLen; ++f) {
    agent.future.points.push_back(agent.history[f % kHistoryLen] + c);
  }
  scene.agents.push_back(agent);
  return scene;
}

Trajectory straight_future(double speed)
{
  Trajectory t;
  for (int f = 0; f < kFutureLen; ++f) {
    t.points.push_back({speed * (f + 1) * kFrameDt, 0.0});
  }
  return t;
}

}  // namespace

TEST_CASE("attack_objective signs and identity")
{
  const Trajectory truth = straight_future(8.0);
  for (const char * name : {"ade", "lateral-right", "lateral-left", "longitudinal-forward",
                            "longitudinal-backward"}) {
    const auto type = attack::attack_type_from_string(name);
    REQUIRE(type.has_value());
    CHECK(attack::attack_objective(truth, truth, *type) == doctest::Approx(0.0));
  }

  Trajectory right = truth;
  for (auto & p : right.points) p.y -= 1.0;
  AttackType lat_right{Kind::kLateral, attack::LateralSign::kRight, attack::LonSign::kForward};
  CHECK(attack::attack_objective(right, truth, lat_right) == doctest::Approx(1.0));

  Trajectory behind = truth;
  for (auto & p : behind.points) p.x -= 1.0;
  AttackType lon_back{Kind::kLongitudinal, attack::LateralSign::kRight,
                      attack::LonSign::kBackward};
  CHECK(attack::attack_objective(behind, truth, lon_back) == doctest::Approx(1.0));
}

TEST_CASE("project_perturbation clips radially per waypoint")
{
  const auto kept = attack::project_perturbation({{0.3, 0.4}}, 1.0);
  CHECK(kept[0].x == doctest::Approx(0.3));
  CHECK(kept[0].y == doctest::Approx(0.4));

  const auto scaled = attack::project_perturbation({{3.0, 4.0}}, 1.0);
  CHECK(scaled[0].x == doctest::Approx(0.6));
  CHECK(scaled[0].y == doctest::Approx(0.8));

  const auto zero = attack::project_perturbation({{0.0, 0.0}}, 1.0);
  CHECK(zero[0].x == 0.0);
  CHECK(zero[0].y == 0.0);
}

TEST_CASE("is_successful is a strict threshold test")
{
  CHECK(attack::is_successful(1.3, 5.2, 2.0));
  CHECK_FALSE(attack::is_successful(1.3, 1.3, 2.0));
  CHECK_FALSE(attack::is_successful(1.3, 2.0, 2.0));
}

TEST_CASE("zero iterations return the benign history")
{
  const PassThrough model;
  const Scene scene = pass_through_scene({0.6, -0.8});
  AttackConfig cfg;
  cfg.iterations = 0;
  const auto res = attack::pgd_attack(model, scene, AttackType{}, cfg);
  CHECK(res.adv_history == scene.target().history);
  CHECK(res.objective_value == doctest::Approx(res.benign_objective));
  CHECK_FALSE(res.success);
}

TEST_CASE("a history-blind model yields no perturbation")
{
  ConstantModel model;
  model.fixed = straight_future(8.0);
  Scene scene = pass_through_scene({0.6, -0.8});
  const auto res = attack::pgd_attack(model, scene, AttackType{}, AttackConfig{});
  CHECK(res.adv_history == scene.target().history);
  CHECK_FALSE(res.success);
}

TEST_CASE("pass-through model saturates the deviation ball to the analytic optimum")
{
  const PassThrough model;
  const Waypoint c{0.6, -0.8};  // |c| = 1
  const Scene scene = pass_through_scene(c);
  AttackConfig cfg;  // 20 iterations x 0.1 m can cross the 1 m ball
  const auto res = attack::pgd_attack(model, scene, AttackType{}, cfg);

  CHECK(res.benign_objective == doctest::Approx(1.0).epsilon(1e-12));
  // Closed form: every output term grows by exactly epsilon at the optimum.
  CHECK(res.objective_value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(res.success);
  for (int i = 0; i < kHistoryLen; ++i) {
    const double dev = distance(res.adv_history[i], scene.target().history[i]);
    CHECK(dev == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dev <= cfg.epsilon + 1e-9);
  }
}

TEST_CASE("attacks respect the ball, improve the objective and mutate nothing")
{
  ModelConfig mc;
  mc.embed_width = 8;
  mc.latent_other_width = 4;
  mc.hidden_width = 6;
  mc.conv_channels = 2;
  mc.context_width = 4;
  mc.disc_hidden = 3;
  const PredictorModel model(mc);
  const auto params_before = model.params().flat_values();

  Rng seeds(4242);
  const std::array<const char *, 3> kinds{"ade", "lateral-right", "longitudinal-forward"};
  for (int trial = 0; trial < 30; ++trial) {
    const auto tpl = static_cast<scenario::Template>(trial % scenario::kTemplateCount);
    const Scene scene = scenario::generate_synthetic_scene(seeds(), tpl);
    const Scene scene_copy = scene;
    AttackConfig cfg;
    cfg.iterations = 8;
    cfg.epsilon = uniform(seeds, 0.3, 1.5);
    cfg.step_size = uniform(seeds, 0.05, 0.3);
    const auto type = *attack::attack_type_from_string(kinds[trial % kinds.size()]);
    const auto res = attack::pgd_attack(model, scene, type, cfg);

    CHECK(res.objective_value >= res.benign_objective);  // keep_best monotonicity
    for (int i = 0; i < kHistoryLen; ++i) {
      CHECK(distance(res.adv_history[i], scene.target().history[i]) <= cfg.epsilon + 1e-9);
    }
    CHECK(scene == scene_copy);  // purity
  }
  CHECK(model.params().flat_values() == params_before);
}

TEST_CASE("invalid attack configs are rejected")
{
  const PassThrough model;
  const Scene scene = pass_through_scene({0.6, -0.8});
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(attack::pgd_attack(model, scene, AttackType{}, cfg), Error);
}
