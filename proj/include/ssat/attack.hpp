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

#ifndef SSAT_ATTACK_HPP_
#define SSAT_ATTACK_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssat/predictor.hpp"
#include "ssat/scene.hpp"
#include "ssat/tape.hpp"

namespace ssat::attack
{

enum class Kind { kAde, kLateral, kLongitudinal };
enum class LateralSign { kRight, kLeft };
enum class LonSign { kForward, kBackward };

// One attack objective: random ADE maximization or a signed directional push.
struct AttackType
{
  Kind kind = Kind::kAde;
  LateralSign lat_sign = LateralSign::kRight;
  LonSign lon_sign = LonSign::kForward;

  friend bool operator==(const AttackType &, const AttackType &) = default;
};

std::string to_string(const AttackType & type);
// "ade", "lateral-right", "lateral-left", "longitudinal-forward",
// "longitudinal-backward"; "lateral"/"longitudinal" default their sign.
std::optional<AttackType> attack_type_from_string(std::string_view name);

struct AttackConfig
{
  double epsilon = 1.0;     // per-waypoint deviation budget, meters
  int iterations = 20;
  double step_size = 0.1;   // meters per iteration per waypoint
  bool keep_best = true;
  std::uint64_t seed = 0;
  bool random_start = false;  // seed-driven start inside the budget ball
};

struct AttackResult
{
  Trajectory adv_history;      // perturbed target history
  double objective_value = 0.0;
  double benign_objective = 0.0;
  int iterations_run = 0;
  bool success = false;        // objective strictly improved and run completed
  bool aborted_nonfinite = false;
};

// Objective in meters; positive is "worse for the victim" under the
// configured sign. Differentiable in pred along the tape variant below.
double attack_objective(
  const Trajectory & pred, const Trajectory & truth, const AttackType & type);
ad::Index attack_objective_on_tape(
  ad::Tape & tape, ad::Index pred, const Trajectory & truth, const AttackType & type);

// Radial projection of each per-waypoint offset onto the epsilon disc.
std::vector<Waypoint> project_perturbation(std::vector<Waypoint> delta, double epsilon);

// Projected gradient ascent on the target history. Per-waypoint normalized
// steps, projection after every step, best iterate kept when configured.
// Never mutates the scene or the model.
AttackResult pgd_attack(
  const FuturePredictor & model, const Scene & scene, const AttackType & type,
  const AttackConfig & cfg);

// Alg-style success gate: strictly above the threshold.
bool is_successful(double benign_err, double attacked_err, double threshold);

}  // namespace ssat::attack

#endif  // SSAT_ATTACK_HPP_
