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

#include "ssat/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssat/error.hpp"
#include "ssat/metrics.hpp"

namespace ssat::train
{

namespace
{

constexpr double kLogClamp = 1e-7;

double smooth_l1(double e)
{
  const double a = std::abs(e);
  return a < 1.0 ? 0.5 * e * e : a - 0.5;
}

// Latent layout on tapes: [lon, lat0, lat1, lat2, other...].
ad::Index semi_loss_on_tape(ad::Tape & t, ad::Index latent, const SemanticLabels & labels)
{
  std::vector<ad::Index> terms;
  if (labels.lateral_intent) {
    const int idx = 1 + static_cast<int>(*labels.lateral_intent);
    const ad::Index z_cls = t.gather1(latent, idx);
    terms.push_back(t.scale(t.clamped_log(z_cls, kLogClamp), -1.0));
  }
  if (labels.headway_s) {
    const ad::Index z_lon = t.gather1(latent, 0);
    const ad::Index diff = t.sub(z_lon, t.scalar_constant(*labels.headway_s));
    terms.push_back(t.mul(diff, diff));
  }
  if (terms.empty()) {
    return t.scalar_constant(0.0);
  }
  return t.sum_list(terms);
}

ad::Index reg_loss_on_tape(ad::Tape & t, const PredictorModel & model, ad::Index latent)
{
  const int K = model.config().latent_other_width;
  const std::array<ad::Index, 3> groups{
    t.slice(latent, 0, 1), t.slice(latent, 1, 3), t.slice(latent, 4, K)};
  std::vector<ad::Index> terms;
  for (int g = 0; g < kLatentGroupCount; ++g) {
    const ad::Index p = model.discriminator_on_tape(
      t, static_cast<LatentGroup>(g), groups[static_cast<std::size_t>(g)]);
    const ad::Index one_minus = t.sub(t.scalar_constant(1.0), p);
    terms.push_back(t.clamped_log(one_minus, kLogClamp));
  }
  return t.scale(t.sum_list(terms), 1.0 / kLatentGroupCount);
}

ad::Index disc_loss_on_tape(
  ad::Tape & t, const PredictorModel & model, const LatentState & z_detached,
  const PriorSamples & s)
{
  const std::array<std::vector<double>, 3> fake{
    std::vector<double>{z_detached.lon},
    std::vector<double>{z_detached.lat.begin(), z_detached.lat.end()}, z_detached.other};
  const std::array<const std::vector<double> *, 3> real{&s.lon, &s.lat, &s.other};
  std::vector<ad::Index> terms;
  for (int g = 0; g < kLatentGroupCount; ++g) {
    const auto group = static_cast<LatentGroup>(g);
    const ad::Index p_real =
      model.discriminator_on_tape(t, group, t.constant(*real[static_cast<std::size_t>(g)]));
    const ad::Index p_fake =
      model.discriminator_on_tape(t, group, t.constant(fake[static_cast<std::size_t>(g)]));
    terms.push_back(t.clamped_log(p_real, kLogClamp));
    terms.push_back(t.clamped_log(t.sub(t.scalar_constant(1.0), p_fake), kLogClamp));
  }
  return t.sum_list(terms);
}

// Applies +/- lr * grad to either the discriminator groups or everything else.
void apply_sgd(PredictorModel & model, double lr, bool disc_groups, double sign)
{
  auto & store = model.params();
  for (std::size_t g = 0; g < store.groups().size(); ++g) {
    if (model.is_discriminator_group(g) != disc_groups) {
      continue;
    }
    auto values = store.values(g);
    auto grads = store.grads(g);
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] += sign * lr * grads[i];
    }
  }
}

struct FullGraph
{
  ad::Index features = ad::kNoNode;
  ad::Index latent = ad::kNoNode;
  ad::Index future = ad::kNoNode;
};

FullGraph build_full_graph(
  ad::Tape & t, const PredictorModel & model, const Scene & scene, const Trajectory & history)
{
  FullGraph g;
  const ad::Index hist = t.input(to_flat(history));
  g.features = model.features_on_tape(t, scene, hist);
  g.latent = model.latent_on_tape(t, g.features);
  const ad::Index anchor = t.slice(hist, 2 * kHistoryLen - 2, 2);
  const ad::Index heading = t.normalize2_smooth(
    t.sub(anchor, t.slice(hist, 2 * (kHistoryLen - 6), 2)), 1e-8);
  g.future = model.decode_on_tape(t, g.latent, heading, anchor);
  return g;
}

double beta_sample(Rng & rng, double alpha)
{
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double x = gamma(rng);
  const double y = gamma(rng);
  return (x + y) > 0.0 ? x / (x + y) : 0.5;
}

}  // namespace

double loss_traj(const Trajectory & pred, const Trajectory & truth)
{
  if (pred.size() != truth.size()) {
    fail_invariant("loss_traj: trajectory length mismatch");
  }
  double sum = 0.0;
  for (int i = 0; i < pred.size(); ++i) {
    sum += smooth_l1(pred[i].x - truth[i].x);
    sum += smooth_l1(pred[i].y - truth[i].y);
  }
  return sum / (2.0 * pred.size());
}

double loss_semi(const LatentState & z, const SemanticLabels & labels)
{
  double loss = 0.0;
  if (labels.lateral_intent) {
    const double p = z.lat[static_cast<std::size_t>(*labels.lateral_intent)];
    loss -= std::log(std::max(p, kLogClamp));
  }
  if (labels.headway_s) {
    const double d = *labels.headway_s - z.lon;
    loss += d * d;
  }
  return loss;
}

double loss_reg(const PredictorModel & model, std::span<const double> features)
{
  ad::Tape t(model.param_store(), false);
  const ad::Index latent = model.latent_on_tape(t, t.constant(features));
  return t.scalar(reg_loss_on_tape(t, model, latent));
}

PriorSamples draw_prior_samples(const PriorSpec & spec, Rng & rng)
{
  PriorSamples s;
  s.lon = sample_prior(spec, LatentGroup::kLon, rng);
  s.lat = sample_prior(spec, LatentGroup::kLat, rng);
  s.other = sample_prior(spec, LatentGroup::kOther, rng);
  return s;
}

double loss_disc(
  const PredictorModel & model, std::span<const double> features, const PriorSamples & s)
{
  ad::Tape t(model.param_store(), false);
  const ad::Index latent = model.latent_on_tape(t, t.constant(features));
  const LatentState z = LatentState::from_vector(t.value(latent));
  return t.scalar(disc_loss_on_tape(t, model, z, s));
}

Scene mixup_scene(const Scene & benign, const Scene & adversarial, double lambda)
{
  if (lambda < 0.0 || lambda > 1.0) {
    fail_invariant("mixup_scene: lambda must be in [0, 1]");
  }
  if (benign.scene_id != adversarial.scene_id) {
    fail_invariant("mixup_scene: scene ids differ");
  }
  if (benign.target_id != adversarial.target_id ||
      benign.agents.size() != adversarial.agents.size() || !(benign.map == adversarial.map)) {
    fail_invariant("mixup_scene: scene structure differs");
  }
  for (std::size_t i = 0; i < benign.agents.size(); ++i) {
    const Agent & a = benign.agents[i];
    const Agent & b = adversarial.agents[i];
    if (a.id != b.id || !(a.future == b.future) || a.lane_id != b.lane_id) {
      fail_invariant("mixup_scene: agent " + std::to_string(a.id) + " differs structurally");
    }
    if (a.id != benign.target_id && !(a.history == b.history)) {
      fail_invariant(
        "mixup_scene: non-target agent " + std::to_string(a.id) + " history differs");
    }
  }
  Scene out = benign;
  Trajectory & mixed = out.target().history;
  const Trajectory & adv = adversarial.target().history;
  for (int i = 0; i < mixed.size(); ++i) {
    mixed[i] = lambda * adv[i] + (1.0 - lambda) * mixed[i];
  }
  return out;
}

namespace
{

struct AdvAccumulators
{
  std::vector<double> disc;  // ascended
  std::vector<double> gen;   // descended
  int contributors = 0;

  void ensure(std::size_t n)
  {
    if (disc.size() != n) {
      disc.assign(n, 0.0);
      gen.assign(n, 0.0);
    }
  }
};

bool all_finite(std::span<const double> v)
{
  for (double x : v) {
    if (!std::isfinite(x)) {
      return false;
    }
  }
  return true;
}

// Attack, gate and per-sample gradient evaluation. Contributions go into the
// accumulators; parameters are never touched here.
StepRecord accumulate_adversarial_sample(
  PredictorModel & model, const Scene & scene, const attack::AttackType & type,
  const TrainConfig & cfg, const attack::AttackConfig & atk_cfg, const PriorSpec & prior,
  Rng & rng, AdvAccumulators & acc)
{
  StepRecord rec;
  rec.scene_id = scene.scene_id;
  const SemanticLabels labels = scenario::semantic_labels(scene);
  const Trajectory & truth = scene.target().future;

  const Prediction benign = predict(model, scene);
  rec.benign_ade = metrics::ade(benign.future, truth);

  const attack::AttackResult res = attack::pgd_attack(model, scene, type, atk_cfg);
  if (res.aborted_nonfinite) {
    rec.aborted_nonfinite = true;
    return rec;
  }
  rec.attack_completed = true;

  const Scene adv_scene = with_target_history(scene, res.adv_history);
  const Prediction adv = predict(model, adv_scene);
  rec.attacked_ade = metrics::ade(adv.future, truth);
  rec.gate_passed =
    attack::is_successful(rec.benign_ade, rec.attacked_ade, cfg.success_threshold);
  if (!rec.gate_passed) {
    return rec;  // the gate leaves parameters untouched
  }

  const LateralIntent ref_intent =
    labels.lateral_intent ? *labels.lateral_intent : benign.latent.intent();
  rec.intent_flipped = adv.latent.intent() != ref_intent;
  rec.semi_weight =
    cfg.lambda_semi * (rec.intent_flipped ? cfg.lambda_semi_boost : 1.0);

  auto & store = model.params();
  acc.ensure(store.total_size());
  std::vector<double> sample_disc(store.total_size(), 0.0);
  std::vector<double> sample_gen;

  // Discriminator side, encoder detached.
  if (cfg.lambda_reg > 0.0) {
    const PriorSamples samples = draw_prior_samples(prior, rng);
    ad::Tape t(&store, true);
    store.zero_grads();
    const ad::Index loss = disc_loss_on_tape(t, model, adv.latent, samples);
    rec.loss_disc = t.scalar(loss);
    t.backward(loss);
    sample_disc = store.flat_grads();
  }

  // Generator side: weighted trajectory + semi-supervised + regularization.
  {
    ad::Tape t(&store, true);
    store.zero_grads();
    const FullGraph g = build_full_graph(t, model, adv_scene, res.adv_history);
    std::vector<ad::Index> terms;
    const ad::Index l_traj = t.smooth_l1_mean(g.future, t.constant(to_flat(truth)));
    rec.loss_traj = t.scalar(l_traj);
    if (cfg.lambda_traj > 0.0) {
      terms.push_back(t.scale(l_traj, cfg.lambda_traj));
    }
    if (cfg.lambda_semi > 0.0 && (labels.lateral_intent || labels.headway_s)) {
      const ad::Index l_semi = semi_loss_on_tape(t, g.latent, labels);
      rec.loss_semi = t.scalar(l_semi);
      terms.push_back(t.scale(l_semi, rec.semi_weight));
    }
    if (cfg.lambda_reg > 0.0) {
      const ad::Index l_reg = reg_loss_on_tape(t, model, g.latent);
      rec.loss_reg = t.scalar(l_reg);
      terms.push_back(t.scale(l_reg, cfg.lambda_reg));
    }
    if (!terms.empty()) {
      t.backward(t.sum_list(terms));
    }
    sample_gen = store.flat_grads();
  }

  // MixUp: a benign-leaning convex sample contributing the trajectory loss.
  if (cfg.mixup_enabled) {
    const double lambda =
      cfg.mixup_beta_mode ? beta_sample(rng, cfg.mixup_beta_alpha) : cfg.mixup_lambda;
    const Scene mixed = mixup_scene(scene, adv_scene, lambda);
    ad::Tape t(&store, true);
    store.zero_grads();
    const FullGraph g = build_full_graph(t, model, mixed, mixed.target().history);
    const ad::Index l_traj = t.smooth_l1_mean(g.future, t.constant(to_flat(truth)));
    t.backward(t.scale(l_traj, cfg.lambda_traj > 0.0 ? cfg.lambda_traj : 1.0));
    const auto & mg = store.flat_grads();
    for (std::size_t i = 0; i < sample_gen.size(); ++i) {
      sample_gen[i] += mg[i];
    }
  }

  if (
    !all_finite(sample_disc) || !all_finite(sample_gen) || !std::isfinite(rec.loss_traj) ||
    !std::isfinite(rec.loss_semi) || !std::isfinite(rec.loss_reg) ||
    !std::isfinite(rec.loss_disc)) {
    rec.aborted_nonfinite = true;
    return rec;
  }
  for (std::size_t i = 0; i < acc.disc.size(); ++i) {
    acc.disc[i] += sample_disc[i];
    acc.gen[i] += sample_gen[i];
  }
  acc.contributors += 1;
  return rec;
}

// Applies the accumulated batch: discriminators ascend, the rest descends.
// Returns false (and restores parameters) if the result is non-finite.
bool apply_accumulated(PredictorModel & model, const AdvAccumulators & acc, double lr)
{
  if (acc.contributors == 0) {
    return false;
  }
  auto & store = model.params();
  const std::vector<double> snapshot = store.flat_values();
  const double scale = lr / acc.contributors;
  for (std::size_t g = 0; g < store.groups().size(); ++g) {
    const bool disc = model.is_discriminator_group(g);
    const auto & group = store.groups()[g];
    auto values = store.values(g);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::size_t o = group.offset + i;
      values[i] += disc ? scale * acc.disc[o] : -scale * acc.gen[o];
    }
  }
  if (!store.values_finite()) {
    store.flat_values() = snapshot;
    return false;
  }
  return true;
}

}  // namespace

StepRecord adversarial_training_step(
  PredictorModel & model, const Scene & scene, const attack::AttackType & type,
  const TrainConfig & cfg, const attack::AttackConfig & atk_cfg, const PriorSpec & prior,
  Rng & rng)
{
  AdvAccumulators acc;
  StepRecord rec =
    accumulate_adversarial_sample(model, scene, type, cfg, atk_cfg, prior, rng, acc);
  if (!rec.gate_passed || rec.aborted_nonfinite) {
    return rec;
  }
  rec.params_updated = apply_accumulated(model, acc, cfg.learning_rate);
  rec.aborted_nonfinite = rec.aborted_nonfinite || !rec.params_updated;
  return rec;
}

namespace
{

struct EvalStats
{
  double benign_ade = 0.0;
  double attacked_ade = 0.0;
  double intention_error = 0.0;
};

EvalStats evaluate_subset(
  const PredictorModel & model, std::span<const Scene> scenes,
  std::span<const SemanticLabels> labels, int subset, bool with_attack,
  const attack::AttackType & type, const attack::AttackConfig & atk_cfg)
{
  EvalStats stats;
  const int n = std::min<int>(subset, static_cast<int>(scenes.size()));
  if (n == 0) {
    return stats;
  }
  int labeled = 0;
  int wrong = 0;
  for (int i = 0; i < n; ++i) {
    const Scene & scene = scenes[static_cast<std::size_t>(i)];
    const Trajectory & truth = scene.target().future;
    const Prediction benign = predict(model, scene);
    stats.benign_ade += metrics::ade(benign.future, truth);
    LatentState eval_latent = benign.latent;
    if (with_attack) {
      const auto res = attack::pgd_attack(model, scene, type, atk_cfg);
      const Scene adv = with_target_history(scene, res.adv_history);
      const Prediction p = predict(model, adv);
      stats.attacked_ade += metrics::ade(p.future, truth);
      eval_latent = p.latent;
    }
    const auto & label = labels[static_cast<std::size_t>(i)];
    if (label.lateral_intent) {
      ++labeled;
      if (eval_latent.intent() != *label.lateral_intent) {
        ++wrong;
      }
    }
  }
  stats.benign_ade /= n;
  stats.attacked_ade /= n;
  stats.intention_error = labeled > 0 ? static_cast<double>(wrong) / labeled : 0.0;
  return stats;
}

}  // namespace

TrainOutcome train(
  PredictorModel model, std::span<const Scene> scenes, const attack::AttackType & type,
  const TrainConfig & cfg, const attack::AttackConfig & atk_cfg)
{
  if (scenes.empty()) {
    fail_usage("train: empty scene set");
  }
  Rng rng(cfg.seed);
  TrainReport report;

  std::vector<SemanticLabels> labels;
  labels.reserve(scenes.size());
  for (const auto & s : scenes) {
    labels.push_back(scenario::semantic_labels(s));
  }
  PriorSpec prior;
  prior.other_width = model.config().latent_other_width;
  prior.lat_probs = estimate_lat_probs(labels);

  std::vector<int> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  auto & store = model.params();
  double lr = cfg.learning_rate;

  // Benign pretraining with the method's loss weights.
  const int batch = std::max(1, cfg.batch_size);
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics em;
    em.epoch = epoch;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch));
      const double inv = 1.0 / static_cast<double>(end - start);
      const std::vector<double> snapshot = store.flat_values();

      if (cfg.lambda_reg > 0.0) {
        store.zero_grads();
        double batch_disc = 0.0;
        for (std::size_t k = start; k < end; ++k) {
          const Scene & scene = scenes[static_cast<std::size_t>(order[k])];
          const auto x = extract_features(model, scene);
          const LatentState z = encode(model, x);
          const PriorSamples samples = draw_prior_samples(prior, rng);
          ad::Tape t(&store, true);
          const ad::Index loss = disc_loss_on_tape(t, model, z, samples);
          batch_disc += t.scalar(loss);
          t.backward(loss);
        }
        apply_sgd(model, lr * inv, true, +1.0);
        em.mean_loss_disc += batch_disc * inv;
      }

      store.zero_grads();
      double batch_traj = 0.0;
      double batch_semi = 0.0;
      double batch_reg = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const int idx = order[k];
        const Scene & scene = scenes[static_cast<std::size_t>(idx)];
        const auto & label = labels[static_cast<std::size_t>(idx)];
        ad::Tape t(&store, true);
        const FullGraph g = build_full_graph(t, model, scene, scene.target().history);
        std::vector<ad::Index> terms;
        const ad::Index l_traj =
          t.smooth_l1_mean(g.future, t.constant(to_flat(scene.target().future)));
        batch_traj += t.scalar(l_traj);
        if (cfg.lambda_traj > 0.0) {
          terms.push_back(t.scale(l_traj, cfg.lambda_traj));
        }
        if (cfg.lambda_semi > 0.0 && (label.lateral_intent || label.headway_s)) {
          const ad::Index l_semi = semi_loss_on_tape(t, g.latent, label);
          batch_semi += t.scalar(l_semi);
          terms.push_back(t.scale(l_semi, cfg.lambda_semi));
        }
        if (cfg.lambda_reg > 0.0) {
          const ad::Index l_reg = reg_loss_on_tape(t, model, g.latent);
          batch_reg += t.scalar(l_reg);
          terms.push_back(t.scale(l_reg, cfg.lambda_reg));
        }
        if (!terms.empty()) {
          t.backward(t.sum_list(terms));
        }
      }
      apply_sgd(model, lr * inv, false, -1.0);
      em.mean_loss_traj += batch_traj * inv;
      em.mean_loss_semi += batch_semi * inv;
      em.mean_loss_reg += batch_reg * inv;
      ++steps;

      if (!store.values_finite()) {
        store.flat_values() = snapshot;
        ++em.aborted_steps;
      }
    }
    if (steps > 0) {
      em.mean_loss_traj /= steps;
      em.mean_loss_semi /= steps;
      em.mean_loss_reg /= steps;
      em.mean_loss_disc /= steps;
    }
    const EvalStats stats =
      evaluate_subset(model, scenes, labels, cfg.eval_subset, false, type, atk_cfg);
    em.benign_ade = stats.benign_ade;
    em.intention_error = stats.intention_error;
    report.epochs.push_back(em);
    lr *= cfg.lr_decay;
  }

  PredictorModel pretrained = model;
  std::vector<double> best_params = model.params().flat_values();
  double best_attacked = std::numeric_limits<double>::infinity();

  // Adversarial epochs per the per-sample pipeline.
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics em;
    em.epoch = cfg.pretrain_epochs + epoch;
    em.adversarial = true;
    int updated = 0;
    train::TrainConfig step_cfg = cfg;
    step_cfg.learning_rate = lr;
    AdvAccumulators acc;
    int in_batch = 0;
    auto flush = [&]() {
      const bool applied = apply_accumulated(model, acc, lr);
      if (!applied && acc.contributors > 0) {
        ++em.aborted_steps;
      }
      acc = AdvAccumulators{};
      in_batch = 0;
      return applied;
    };
    for (int idx : order) {
      StepRecord rec = accumulate_adversarial_sample(
        model, scenes[static_cast<std::size_t>(idx)], type, step_cfg, atk_cfg, prior, rng,
        acc);
      em.gate_passes += rec.gate_passed ? 1 : 0;
      em.intent_flips += rec.intent_flipped ? 1 : 0;
      em.aborted_steps += rec.aborted_nonfinite ? 1 : 0;
      if (rec.gate_passed && !rec.aborted_nonfinite) {
        rec.params_updated = true;  // applied with this batch below
        em.mean_loss_traj += rec.loss_traj;
        em.mean_loss_semi += rec.loss_semi;
        em.mean_loss_reg += rec.loss_reg;
        em.mean_loss_disc += rec.loss_disc;
        ++updated;
        ++in_batch;
      }
      report.steps.push_back(std::move(rec));
      if (in_batch >= batch) {
        flush();
      }
    }
    if (in_batch > 0) {
      flush();
    }
    if (updated > 0) {
      em.mean_loss_traj /= updated;
      em.mean_loss_semi /= updated;
      em.mean_loss_reg /= updated;
      em.mean_loss_disc /= updated;
    }
    const EvalStats stats =
      evaluate_subset(model, scenes, labels, cfg.eval_subset, true, type, atk_cfg);
    em.benign_ade = stats.benign_ade;
    em.attacked_ade = stats.attacked_ade;
    em.intention_error = stats.intention_error;
    if (cfg.eval_subset > 0 && em.attacked_ade < best_attacked) {
      best_attacked = em.attacked_ade;
      best_params = store.flat_values();
    }
    report.epochs.push_back(em);
    lr *= cfg.lr_decay;
  }

  PredictorModel best = model;
  if (std::isfinite(best_attacked)) {
    best.params().flat_values() = best_params;
  }
  return {std::move(model), std::move(pretrained), std::move(best), std::move(report)};
}

}  // namespace ssat::train
