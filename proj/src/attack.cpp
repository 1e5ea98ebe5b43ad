// Copyright 2026 The ssat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssat/attack.hpp"

#include <cmath>
#include <limits>

#include "ssat/error.hpp"
#include "ssat/metrics.hpp"
#include "ssat/rng.hpp"

namespace ssat::attack
{

std::string to_string(const AttackType & type)
{
  switch (type.kind) {
    case Kind::kAde:
      return "ade";
    case Kind::kLateral:
      return type.lat_sign == LateralSign::kRight ? "lateral-right" : "lateral-left";
    default:
      return type.lon_sign == LonSign::kForward ? "longitudinal-forward"
                                                : "longitudinal-backward";
  }
}

std::optional<AttackType> attack_type_from_string(std::string_view name)
{
  AttackType t;
  if (name == "ade") {
    t.kind = Kind::kAde;
    return t;
  }
  if (name == "lateral" || name == "lateral-right") {
    t.kind = Kind::kLateral;
    t.lat_sign = LateralSign::kRight;
    return t;
  }
  if (name == "lateral-left") {
    t.kind = Kind::kLateral;
    t.lat_sign = LateralSign::kLeft;
    return t;
  }
  if (name == "longitudinal" || name == "longitudinal-forward") {
    t.kind = Kind::kLongitudinal;
    t.lon_sign = LonSign::kForward;
    return t;
  }
  if (name == "longitudinal-backward") {
    t.kind = Kind::kLongitudinal;
    t.lon_sign = LonSign::kBackward;
    return t;
  }
  return std::nullopt;
}

namespace
{

// Flat per-coordinate weights w such that the directional objective is
// dot(pred - truth, w): signed unit vectors divided by the frame count.
std::vector<double> directional_weights(const Trajectory & truth, const AttackType & type)
{
  const auto frames = metrics::direction_frames(truth);
  const double sign =
    type.kind == Kind::kLateral
      ? (type.lat_sign == LateralSign::kRight ? 1.0 : -1.0)
      : (type.lon_sign == LonSign::kForward ? 1.0 : -1.0);
  const double inv = sign / static_cast<double>(truth.size());
  std::vector<double> w(static_cast<std::size_t>(truth.size()) * 2);
  for (int i = 0; i < truth.size(); ++i) {
    const auto & f = frames[static_cast<std::size_t>(i)];
    const Waypoint u = type.kind == Kind::kLateral ? f.u_lat : f.u_lon;
    w[static_cast<std::size_t>(2 * i)] = inv * u.x;
    w[static_cast<std::size_t>(2 * i + 1)] = inv * u.y;
  }
  return w;
}

}  // namespace

double attack_objective(
  const Trajectory & pred, const Trajectory & truth, const AttackType & type)
{
  if (pred.size() != truth.size()) {
    fail_invariant("attack_objective: trajectory length mismatch");
  }
  if (type.kind == Kind::kAde) {
    return metrics::ade(pred, truth);
  }
  const auto w = directional_weights(truth, type);
  double obj = 0.0;
  for (int i = 0; i < pred.size(); ++i) {
    obj += (pred[i].x - truth[i].x) * w[static_cast<std::size_t>(2 * i)];
    obj += (pred[i].y - truth[i].y) * w[static_cast<std::size_t>(2 * i + 1)];
  }
  return obj;
}

ad::Index attack_objective_on_tape(
  ad::Tape & tape, ad::Index pred, const Trajectory & truth, const AttackType & type)
{
  if (tape.size(pred) != 2 * truth.size()) {
    fail_invariant("attack_objective_on_tape: trajectory length mismatch");
  }
  const auto truth_flat = to_flat(truth);
  const ad::Index truth_node = tape.constant(truth_flat);
  const ad::Index diff = tape.sub(pred, truth_node);
  if (type.kind == Kind::kAde) {
    return tape.mean_all(tape.pairwise_norms(diff));
  }
  const auto w = directional_weights(truth, type);
  return tape.dot(diff, tape.constant(w));
}

std::vector<Waypoint> project_perturbation(std::vector<Waypoint> delta, double epsilon)
{
  if (epsilon <= 0.0) {
    fail_invariant("project_perturbation: epsilon must be positive");
  }
  for (auto & d : delta) {
    const double n = norm(d);
    if (n > epsilon) {
      d = (epsilon / n) * d;
    }
  }
  return delta;
}

bool is_successful(double benign_err, double attacked_err, double threshold)
{
  if (!std::isfinite(benign_err) || !std::isfinite(attacked_err)) {
    fail_numerical("is_successful: non-finite error value");
  }
  return attacked_err > threshold;
}

AttackResult pgd_attack(
  const FuturePredictor & model, const Scene & scene, const AttackType & type,
  const AttackConfig & cfg)
{
  if (cfg.epsilon <= 0.0 || cfg.step_size <= 0.0 || cfg.iterations < 0) {
    fail_usage("pgd_attack: epsilon and step_size must be positive, iterations >= 0");
  }
  const Trajectory & benign = scene.target().history;
  const Trajectory & truth = scene.target().future;
  const auto base = to_flat(benign);
  const int n = benign.size();

  auto flat_with = [&base, n](const std::vector<Waypoint> & delta) {
    std::vector<double> f = base;
    for (int i = 0; i < n; ++i) {
      f[static_cast<std::size_t>(2 * i)] += delta[static_cast<std::size_t>(i)].x;
      f[static_cast<std::size_t>(2 * i + 1)] += delta[static_cast<std::size_t>(i)].y;
    }
    return f;
  };

  // Evaluates the objective at a perturbation; fills per-waypoint gradients
  // when requested. Returns NaN on non-finite values.
  auto evaluate = [&](const std::vector<Waypoint> & delta,
                      std::vector<Waypoint> * grad_out) -> double {
    ad::Tape tape(model.param_store(), false);
    const ad::Index hist = tape.input(flat_with(delta));
    const ad::Index pred = model.future_on_tape(tape, scene, hist);
    const ad::Index obj = attack_objective_on_tape(tape, pred, truth, type);
    const double val = tape.scalar(obj);
    if (!std::isfinite(val)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    if (grad_out != nullptr) {
      tape.backward(obj);
      const auto g = tape.grad(hist);
      for (int i = 0; i < n; ++i) {
        const double gx = g[static_cast<std::size_t>(2 * i)];
        const double gy = g[static_cast<std::size_t>(2 * i + 1)];
        if (!std::isfinite(gx) || !std::isfinite(gy)) {
          return std::numeric_limits<double>::quiet_NaN();
        }
        (*grad_out)[static_cast<std::size_t>(i)] = {gx, gy};
      }
    }
    return val;
  };

  const std::vector<Waypoint> zero(static_cast<std::size_t>(n));
  AttackResult res;
  res.adv_history = benign;

  const double benign_obj = evaluate(zero, nullptr);
  if (!std::isfinite(benign_obj)) {
    res.aborted_nonfinite = true;
    return res;
  }
  res.benign_objective = benign_obj;
  res.objective_value = benign_obj;

  std::vector<Waypoint> delta = zero;
  if (cfg.random_start) {
    Rng rng(cfg.seed);
    for (auto & d : delta) {
      const double ang = uniform(rng, 0.0, 2.0 * M_PI);
      const double rad = cfg.epsilon * std::sqrt(uniform(rng, 0.0, 1.0));
      d = {rad * std::cos(ang), rad * std::sin(ang)};
    }
  }

  double best_obj = benign_obj;
  std::vector<Waypoint> best_delta = zero;
  auto consider = [&](double val, const std::vector<Waypoint> & d) {
    if (val > best_obj) {
      best_obj = val;
      best_delta = d;
    }
  };

  std::vector<Waypoint> grad(static_cast<std::size_t>(n));
  for (int it = 0; it < cfg.iterations; ++it) {
    const double val = evaluate(delta, &grad);
    if (!std::isfinite(val)) {
      res.aborted_nonfinite = true;
      res.adv_history = benign;
      res.objective_value = benign_obj;
      return res;
    }
    consider(val, delta);
    for (int i = 0; i < n; ++i) {
      const double gn = norm(grad[static_cast<std::size_t>(i)]);
      if (gn > 1e-12) {
        delta[static_cast<std::size_t>(i)] =
          delta[static_cast<std::size_t>(i)] +
          (cfg.step_size / gn) * grad[static_cast<std::size_t>(i)];
      }
    }
    delta = project_perturbation(std::move(delta), cfg.epsilon);
    res.iterations_run = it + 1;
  }

  const double final_obj = evaluate(delta, nullptr);
  if (!std::isfinite(final_obj)) {
    res.aborted_nonfinite = true;
    res.adv_history = benign;
    res.objective_value = benign_obj;
    return res;
  }
  consider(final_obj, delta);

  const auto & chosen = cfg.keep_best ? best_delta : delta;
  res.objective_value = cfg.keep_best ? best_obj : final_obj;
  res.adv_history = trajectory_from_flat(flat_with(chosen));
  res.success = res.objective_value > res.benign_objective;
  return res;
}

}  // namespace ssat::attack
