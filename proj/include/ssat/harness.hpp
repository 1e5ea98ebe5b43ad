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

#ifndef SSAT_HARNESS_HPP_
#define SSAT_HARNESS_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssat/attack.hpp"
#include "ssat/predictor.hpp"
#include "ssat/training.hpp"

namespace ssat::harness
{

enum class Method { kAtBaseline, kSsat, kUnsupSsat, kMixupSsat };

std::string to_string(Method method);
std::optional<Method> method_from_string(std::string_view name);

// Maps a method onto the active losses: AT-baseline keeps only the trajectory
// loss, Unsup-SSAT drops the semi-supervised loss, Mixup-SSAT is SSAT with
// mixup enabled.
void apply_method(Method method, train::TrainConfig & cfg);

// --- generate ---------------------------------------------------------------

struct GenerateOptions
{
  int count = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::map<std::string, double> mix;  // template -> weight; empty means uniform
};

struct GenerateSummary
{
  std::map<std::string, int> per_template;
};

GenerateSummary run_generate(const GenerateOptions & opt);

// --- attack evaluation -------------------------------------------------------

struct SceneEval
{
  std::string scene_id;
  double benign_ade = 0.0;
  double attacked_ade = 0.0;
  double benign_lat = 0.0;
  double attacked_lat = 0.0;
  double benign_lon = 0.0;
  double attacked_lon = 0.0;
  std::optional<LateralIntent> intent_label;
  LateralIntent benign_intent = LateralIntent::kForward;
  LateralIntent attacked_intent = LateralIntent::kForward;
  Trajectory adv_history;
  Trajectory benign_pred;
  Trajectory attacked_pred;
};

struct AttackEvalSummary
{
  std::vector<SceneEval> rows;
  double mean_benign_ade = 0.0;
  double mean_attacked_ade = 0.0;
  double mean_benign_lat = 0.0;
  double mean_attacked_lat = 0.0;
  double mean_benign_lon = 0.0;
  double mean_attacked_lon = 0.0;
  double benign_intent_error = 0.0;    // over labeled scenes
  double attacked_intent_error = 0.0;
  int labeled_scenes = 0;
};

// Pure in-memory evaluation; scenes are attacked independently (thread-safe,
// results identical for any thread count).
AttackEvalSummary evaluate_scenes(
  const PredictorModel & model, std::span<const Scene> scenes, const attack::AttackType & type,
  const attack::AttackConfig & atk, int threads = 1);

// Mean error in the attack's own metric: ADE for the ADE attack, signed
// directional error oriented along the configured attack sign otherwise.
double attacked_error_of(const AttackEvalSummary & summary, const attack::AttackType & type);
double benign_error_of(const AttackEvalSummary & summary, const attack::AttackType & type);

struct AttackEvalOptions
{
  std::filesystem::path checkpoint;
  std::filesystem::path scenes;
  attack::AttackType type;
  attack::AttackConfig atk;
  std::filesystem::path out_metrics;
  std::optional<std::filesystem::path> plot_dir;
  int threads = 1;
};

AttackEvalSummary run_attack_eval(const AttackEvalOptions & opt);

// --- training runs ----------------------------------------------------------

struct TrainRunOptions
{
  Method method = Method::kSsat;
  attack::AttackType train_attack;
  std::filesystem::path train_scenes;
  std::filesystem::path out_dir;
  ModelConfig model_cfg;
  train::TrainConfig train_cfg;  // before method mapping
  attack::AttackConfig atk_cfg;
};

struct TrainRunResult
{
  std::filesystem::path run_dir;
  train::TrainReport report;
};

// Writes config.txt, metrics.csv, steps.csv, pretrained.ckpt and final.ckpt.
TrainRunResult run_train(const TrainRunOptions & opt);

// --- cross-attack matrix ------------------------------------------------------

struct MatrixOptions
{
  std::vector<std::filesystem::path> runs;  // run directories from run_train
  std::filesystem::path scenes;             // held-out evaluation scenes
  std::vector<attack::AttackType> eval_attacks;
  attack::AttackConfig atk_cfg;
  std::filesystem::path out;
  int threads = 1;
};

struct MatrixCell
{
  std::string method;
  std::string train_attack;
  std::string eval_attack;
  bool present = false;
  double err_before = 0.0;
  double err_after = 0.0;
  double benign_ade = 0.0;       // final model on clean data
  double intention_error = 0.0;  // final model under the lateral attack
};

struct MatrixResult
{
  std::vector<MatrixCell> cells;
  bool complete = true;
};

MatrixResult run_matrix(const MatrixOptions & opt);

// Renders a matrix file as text tables (before -> after per eval attack).
void run_report(const std::filesystem::path & matrix_csv, std::ostream & out);

}  // namespace ssat::harness

#endif  // SSAT_HARNESS_HPP_
