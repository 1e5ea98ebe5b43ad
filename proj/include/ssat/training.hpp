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

#ifndef SSAT_TRAINING_HPP_
#define SSAT_TRAINING_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssat/attack.hpp"
#include "ssat/predictor.hpp"
#include "ssat/scenario.hpp"
#include "ssat/scene.hpp"

namespace ssat::train
{

struct TrainConfig
{
  double success_threshold = 2.0;  // meters of attacked ADE that make a sample worth training on
  double lambda_traj = 1.0;
  double lambda_semi = 1.0;
  double lambda_reg = 0.1;
  double lambda_semi_boost = 5.0;  // multiplier applied when the attack flips the intention
  bool mixup_enabled = false;
  double mixup_lambda = 2.0 / 3.0;  // weight on the adversarial history
  bool mixup_beta_mode = false;     // draw per-sample lambda ~ Beta(alpha, alpha) instead
  double mixup_beta_alpha = 0.4;
  double learning_rate = 0.01;
  double lr_decay = 1.0;    // per-epoch multiplicative decay (1 = fixed rate)
  int epochs = 5;           // adversarial epochs
  int pretrain_epochs = 5;  // benign epochs before adversarial training
  int batch_size = 1;       // gradient accumulation during benign pretraining
  std::uint64_t seed = 0;
  int eval_subset = 50;  // scenes used for per-epoch report metrics
};

struct StepRecord
{
  std::string scene_id;
  bool attack_completed = false;
  bool gate_passed = false;
  bool intent_flipped = false;
  double semi_weight = 0.0;  // effective weight applied to the semi-supervised loss
  double benign_ade = 0.0;
  double attacked_ade = 0.0;
  double loss_traj = 0.0;
  double loss_semi = 0.0;
  double loss_reg = 0.0;
  double loss_disc = 0.0;
  bool aborted_nonfinite = false;
  bool params_updated = false;

  friend bool operator==(const StepRecord &, const StepRecord &) = default;
};

struct EpochMetrics
{
  int epoch = 0;
  bool adversarial = false;
  double benign_ade = 0.0;
  double attacked_ade = 0.0;    // training attack type; 0 during pretraining
  double intention_error = 0.0;
  double mean_loss_traj = 0.0;
  double mean_loss_semi = 0.0;
  double mean_loss_reg = 0.0;
  double mean_loss_disc = 0.0;
  int gate_passes = 0;
  int intent_flips = 0;
  int aborted_steps = 0;

  friend bool operator==(const EpochMetrics &, const EpochMetrics &) = default;
};

struct TrainReport
{
  std::vector<EpochMetrics> epochs;
  std::vector<StepRecord> steps;  // adversarial phase, one per sample

  friend bool operator==(const TrainReport &, const TrainReport &) = default;
};

struct TrainOutcome
{
  PredictorModel model;             // after adversarial training
  PredictorModel pretrained_model;  // snapshot after benign pretraining
  PredictorModel best_model;        // lowest attacked ADE on the eval subset
  TrainReport report;
};

// Eq-style losses (value-level; the training steps use tape twins).
double loss_traj(const Trajectory & pred, const Trajectory & truth);
double loss_semi(const LatentState & z, const SemanticLabels & labels);
double loss_reg(const PredictorModel & model, std::span<const double> features);

struct PriorSamples
{
  std::vector<double> lon;    // width 1
  std::vector<double> lat;    // one-hot width 3
  std::vector<double> other;  // width K
};

PriorSamples draw_prior_samples(const PriorSpec & spec, Rng & rng);

double loss_disc(
  const PredictorModel & model, std::span<const double> features, const PriorSamples & s);

// Convex combination of histories; ground truth and other agents are shared.
Scene mixup_scene(const Scene & benign, const Scene & adversarial, double lambda);

// One Alg-style adversarial sample: attack, gate on attacked ADE, then a
// discriminator ascent step and a weighted encoder/decoder/extractor descent
// step. Unsuccessful attacks leave the parameters bit-identical.
StepRecord adversarial_training_step(
  PredictorModel & model, const Scene & scene, const attack::AttackType & type,
  const TrainConfig & cfg, const attack::AttackConfig & atk_cfg, const PriorSpec & prior,
  Rng & rng);

// Benign pretraining followed by adversarial epochs over seeded shuffles.
TrainOutcome train(
  PredictorModel model, std::span<const Scene> scenes, const attack::AttackType & type,
  const TrainConfig & cfg, const attack::AttackConfig & atk_cfg);

}  // namespace ssat::train

#endif  // SSAT_TRAINING_HPP_
