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

#include "ssat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "ssat/config.hpp"
#include "ssat/error.hpp"
#include "ssat/metrics.hpp"
#include "ssat/scenario.hpp"
#include "ssat/svg.hpp"

namespace ssat::harness
{

std::string to_string(Method method)
{
  switch (method) {
    case Method::kAtBaseline:
      return "AT-baseline";
    case Method::kSsat:
      return "SSAT";
    case Method::kUnsupSsat:
      return "Unsup-SSAT";
    default:
      return "Mixup-SSAT";
  }
}

std::optional<Method> method_from_string(std::string_view name)
{
  if (name == "AT-baseline") return Method::kAtBaseline;
  if (name == "SSAT") return Method::kSsat;
  if (name == "Unsup-SSAT") return Method::kUnsupSsat;
  if (name == "Mixup-SSAT") return Method::kMixupSsat;
  return std::nullopt;
}

void apply_method(Method method, train::TrainConfig & cfg)
{
  switch (method) {
    case Method::kAtBaseline:
      cfg.lambda_semi = 0.0;
      cfg.lambda_reg = 0.0;
      cfg.mixup_enabled = false;
      break;
    case Method::kSsat:
      cfg.mixup_enabled = false;
      break;
    case Method::kUnsupSsat:
      cfg.lambda_semi = 0.0;
      cfg.mixup_enabled = false;
      break;
    case Method::kMixupSsat:
      cfg.mixup_enabled = true;
      break;
  }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

GenerateSummary run_generate(const GenerateOptions & opt)
{
  if (opt.count <= 0) {
    fail_usage("generate: count must be positive");
  }
  std::vector<std::pair<scenario::Template, double>> weights;
  if (opt.mix.empty()) {
    for (int i = 0; i < scenario::kTemplateCount; ++i) {
      weights.emplace_back(static_cast<scenario::Template>(i), 1.0);
    }
  } else {
    for (const auto & [name, w] : opt.mix) {
      const auto tpl = scenario::template_from_string(name);
      if (!tpl) {
        fail_usage("generate: unknown template in mix: " + name);
      }
      if (w < 0.0) {
        fail_usage("generate: negative weight for template " + name);
      }
      if (w > 0.0) {
        weights.emplace_back(*tpl, w);
      }
    }
    if (weights.empty()) {
      fail_usage("generate: template mix has no positive weights");
    }
    std::sort(weights.begin(), weights.end(), [](const auto & a, const auto & b) {
      return static_cast<int>(a.first) < static_cast<int>(b.first);
    });
  }
  double total = 0.0;
  for (const auto & [tpl, w] : weights) {
    total += w;
  }
  // Largest-remainder allocation of counts per template.
  std::vector<int> counts(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = opt.count * weights[i].second / total;
    counts[i] = static_cast<int>(exact);
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto & a, const auto & b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int k = 0; assigned < opt.count; ++k, ++assigned) {
    counts[remainders[static_cast<std::size_t>(k) % remainders.size()].second] += 1;
  }

  std::vector<scenario::Template> order;
  order.reserve(static_cast<std::size_t>(opt.count));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    order.insert(order.end(), static_cast<std::size_t>(counts[i]), weights[i].first);
  }
  Rng rng(mix_seed(opt.seed, 0x0de7));
  std::shuffle(order.begin(), order.end(), rng);

  GenerateSummary summary;
  std::vector<Scene> scenes;
  scenes.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    scenario::ScenarioConfig cfg;
    cfg.lane_id_base = 1 + static_cast<int>(k) * 8;
    scenes.push_back(
      scenario::generate_synthetic_scene(mix_seed(opt.seed, k + 1), order[k], cfg));
    summary.per_template[scenario::to_string(order[k])] += 1;
  }
  scenario::export_scenes(opt.out, scenes);
  return summary;
}

// ---------------------------------------------------------------------------
// attack evaluation
// ---------------------------------------------------------------------------

namespace
{

SceneEval evaluate_one(
  const PredictorModel & model, const Scene & scene, const attack::AttackType & type,
  const attack::AttackConfig & atk)
{
  SceneEval row;
  row.scene_id = scene.scene_id;
  const Trajectory & truth = scene.target().future;

  const Prediction benign = predict(model, scene);
  row.benign_pred = benign.future;
  row.benign_ade = metrics::ade(benign.future, truth);
  row.benign_lat = metrics::directional_error(benign.future, truth, metrics::Axis::kLateral);
  row.benign_lon =
    metrics::directional_error(benign.future, truth, metrics::Axis::kLongitudinal);
  row.benign_intent = benign.latent.intent();

  const auto res = attack::pgd_attack(model, scene, type, atk);
  row.adv_history = res.adv_history;
  const Scene adv_scene = with_target_history(scene, res.adv_history);
  const Prediction attacked = predict(model, adv_scene);
  row.attacked_pred = attacked.future;
  row.attacked_ade = metrics::ade(attacked.future, truth);
  row.attacked_lat =
    metrics::directional_error(attacked.future, truth, metrics::Axis::kLateral);
  row.attacked_lon =
    metrics::directional_error(attacked.future, truth, metrics::Axis::kLongitudinal);
  row.attacked_intent = attacked.latent.intent();

  row.intent_label = scenario::label_lateral_intention(scene);
  return row;
}

}  // namespace

AttackEvalSummary evaluate_scenes(
  const PredictorModel & model, std::span<const Scene> scenes, const attack::AttackType & type,
  const attack::AttackConfig & atk, int threads)
{
  AttackEvalSummary summary;
  summary.rows.resize(scenes.size());
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(scenes.size())));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      attack::AttackConfig cfg = atk;
      cfg.seed = mix_seed(atk.seed, i);
      summary.rows[i] = evaluate_one(model, scenes[i], type, cfg);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= scenes.size()) {
            return;
          }
          attack::AttackConfig cfg = atk;
          cfg.seed = mix_seed(atk.seed, i);
          summary.rows[i] = evaluate_one(model, scenes[i], type, cfg);
        }
      });
    }
    for (auto & th : pool) {
      th.join();
    }
  }

  int labeled = 0;
  int benign_wrong = 0;
  int attacked_wrong = 0;
  for (const auto & row : summary.rows) {
    summary.mean_benign_ade += row.benign_ade;
    summary.mean_attacked_ade += row.attacked_ade;
    summary.mean_benign_lat += row.benign_lat;
    summary.mean_attacked_lat += row.attacked_lat;
    summary.mean_benign_lon += row.benign_lon;
    summary.mean_attacked_lon += row.attacked_lon;
    if (row.intent_label) {
      ++labeled;
      benign_wrong += row.benign_intent != *row.intent_label ? 1 : 0;
      attacked_wrong += row.attacked_intent != *row.intent_label ? 1 : 0;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, summary.rows.size()));
  summary.mean_benign_ade /= n;
  summary.mean_attacked_ade /= n;
  summary.mean_benign_lat /= n;
  summary.mean_attacked_lat /= n;
  summary.mean_benign_lon /= n;
  summary.mean_attacked_lon /= n;
  summary.labeled_scenes = labeled;
  if (labeled > 0) {
    summary.benign_intent_error = static_cast<double>(benign_wrong) / labeled;
    summary.attacked_intent_error = static_cast<double>(attacked_wrong) / labeled;
  }
  return summary;
}

double attacked_error_of(const AttackEvalSummary & summary, const attack::AttackType & type)
{
  switch (type.kind) {
    case attack::Kind::kAde:
      return summary.mean_attacked_ade;
    case attack::Kind::kLateral:
      return (type.lat_sign == attack::LateralSign::kRight ? 1.0 : -1.0) *
             summary.mean_attacked_lat;
    default:
      return (type.lon_sign == attack::LonSign::kForward ? 1.0 : -1.0) *
             summary.mean_attacked_lon;
  }
}

double benign_error_of(const AttackEvalSummary & summary, const attack::AttackType & type)
{
  switch (type.kind) {
    case attack::Kind::kAde:
      return summary.mean_benign_ade;
    case attack::Kind::kLateral:
      return (type.lat_sign == attack::LateralSign::kRight ? 1.0 : -1.0) *
             summary.mean_benign_lat;
    default:
      return (type.lon_sign == attack::LonSign::kForward ? 1.0 : -1.0) *
             summary.mean_benign_lon;
  }
}

namespace
{

std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_attack_metrics(
  const std::filesystem::path & path, const AttackEvalSummary & summary)
{
  std::ofstream out(path);
  if (!out) {
    fail_usage("cannot write metrics file: " + path.string());
  }
  out << "scene_id,benign_ade,attacked_ade,benign_lat,attacked_lat,benign_lon,attacked_lon,"
         "intent_label,benign_intent,attacked_intent\n";
  for (const auto & row : summary.rows) {
    out << row.scene_id << ',' << fmt(row.benign_ade) << ',' << fmt(row.attacked_ade) << ','
        << fmt(row.benign_lat) << ',' << fmt(row.attacked_lat) << ',' << fmt(row.benign_lon)
        << ',' << fmt(row.attacked_lon) << ','
        << (row.intent_label ? to_string(*row.intent_label) : std::string()) << ','
        << to_string(row.benign_intent) << ',' << to_string(row.attacked_intent) << '\n';
  }
  out << "__summary__," << fmt(summary.mean_benign_ade) << ','
      << fmt(summary.mean_attacked_ade) << ',' << fmt(summary.mean_benign_lat) << ','
      << fmt(summary.mean_attacked_lat) << ',' << fmt(summary.mean_benign_lon) << ','
      << fmt(summary.mean_attacked_lon) << ',' << ','
      << fmt(summary.benign_intent_error) << ',' << fmt(summary.attacked_intent_error)
      << '\n';
}

}  // namespace

AttackEvalSummary run_attack_eval(const AttackEvalOptions & opt)
{
  const PredictorModel model = load_checkpoint(opt.checkpoint);
  const auto scenes = scenario::ingest_scenes(opt.scenes);
  AttackEvalSummary summary = evaluate_scenes(model, scenes, opt.type, opt.atk, opt.threads);
  write_attack_metrics(opt.out_metrics, summary);
  if (opt.plot_dir) {
    std::filesystem::create_directories(*opt.plot_dir);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const auto & row = summary.rows[i];
      std::string name = row.scene_id;
      std::replace(name.begin(), name.end(), '#', '_');
      write_scene_overlay(
        *opt.plot_dir / (name + ".svg"), scenes[i], row.adv_history, row.benign_pred,
        row.attacked_pred);
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// training runs
// ---------------------------------------------------------------------------

namespace
{

void write_run_config(const std::filesystem::path & path, const TrainRunOptions & opt,
                      const train::TrainConfig & effective)
{
  Config cfg;
  cfg.set("run.method", to_string(opt.method));
  cfg.set("run.train_attack", attack::to_string(opt.train_attack));
  cfg.set("model.embed_width", std::to_string(opt.model_cfg.embed_width));
  cfg.set("model.latent_other_width", std::to_string(opt.model_cfg.latent_other_width));
  cfg.set("model.hidden_width", std::to_string(opt.model_cfg.hidden_width));
  cfg.set("model.conv_channels", std::to_string(opt.model_cfg.conv_channels));
  cfg.set("model.context_width", std::to_string(opt.model_cfg.context_width));
  cfg.set("model.disc_hidden", std::to_string(opt.model_cfg.disc_hidden));
  cfg.set("model.init_seed", std::to_string(opt.model_cfg.init_seed));
  cfg.set("train.success_threshold", fmt(effective.success_threshold));
  cfg.set("train.lambda_traj", fmt(effective.lambda_traj));
  cfg.set("train.lambda_semi", fmt(effective.lambda_semi));
  cfg.set("train.lambda_reg", fmt(effective.lambda_reg));
  cfg.set("train.lambda_semi_boost", fmt(effective.lambda_semi_boost));
  cfg.set("train.mixup_enabled", effective.mixup_enabled ? "true" : "false");
  cfg.set("train.mixup_lambda", fmt(effective.mixup_lambda));
  cfg.set("train.learning_rate", fmt(effective.learning_rate));
  cfg.set("train.lr_decay", fmt(effective.lr_decay));
  cfg.set("train.epochs", std::to_string(effective.epochs));
  cfg.set("train.pretrain_epochs", std::to_string(effective.pretrain_epochs));
  cfg.set("train.batch_size", std::to_string(effective.batch_size));
  cfg.set("train.seed", std::to_string(effective.seed));
  cfg.set("train.eval_subset", std::to_string(effective.eval_subset));
  cfg.set("attack.epsilon", fmt(opt.atk_cfg.epsilon));
  cfg.set("attack.iterations", std::to_string(opt.atk_cfg.iterations));
  cfg.set("attack.step_size", fmt(opt.atk_cfg.step_size));
  cfg.set("attack.keep_best", opt.atk_cfg.keep_best ? "true" : "false");
  cfg.write(path);
}

void write_epoch_metrics(
  const std::filesystem::path & path, const train::TrainReport & report)
{
  std::ofstream out(path);
  if (!out) {
    fail_usage("cannot write metrics file: " + path.string());
  }
  out << "epoch,phase,benign_ade,attacked_ade,intention_error,loss_traj,loss_semi,"
         "loss_reg,loss_disc,gate_passes,intent_flips,aborted_steps\n";
  for (const auto & em : report.epochs) {
    out << em.epoch << ',' << (em.adversarial ? "adversarial" : "pretrain") << ','
        << fmt(em.benign_ade) << ',' << fmt(em.attacked_ade) << ','
        << fmt(em.intention_error) << ',' << fmt(em.mean_loss_traj) << ','
        << fmt(em.mean_loss_semi) << ',' << fmt(em.mean_loss_reg) << ','
        << fmt(em.mean_loss_disc) << ',' << em.gate_passes << ',' << em.intent_flips << ','
        << em.aborted_steps << '\n';
  }
}

void write_step_records(
  const std::filesystem::path & path, const train::TrainReport & report)
{
  std::ofstream out(path);
  if (!out) {
    fail_usage("cannot write steps file: " + path.string());
  }
  out << "index,scene_id,attack_completed,gate_passed,intent_flipped,semi_weight,"
         "benign_ade,attacked_ade,params_updated,aborted_nonfinite\n";
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto & s = report.steps[i];
    out << i << ',' << s.scene_id << ',' << (s.attack_completed ? 1 : 0) << ','
        << (s.gate_passed ? 1 : 0) << ',' << (s.intent_flipped ? 1 : 0) << ','
        << fmt(s.semi_weight) << ',' << fmt(s.benign_ade) << ',' << fmt(s.attacked_ade)
        << ',' << (s.params_updated ? 1 : 0) << ',' << (s.aborted_nonfinite ? 1 : 0) << '\n';
  }
}

}  // namespace

TrainRunResult run_train(const TrainRunOptions & opt)
{
  const auto scenes = scenario::ingest_scenes(opt.train_scenes);
  if (scenes.empty()) {
    fail_usage("train: no scenes in " + opt.train_scenes.string());
  }
  train::TrainConfig cfg = opt.train_cfg;
  apply_method(opt.method, cfg);

  std::filesystem::create_directories(opt.out_dir);
  write_run_config(opt.out_dir / "config.txt", opt, cfg);

  PredictorModel model(opt.model_cfg);
  auto outcome = train::train(std::move(model), scenes, opt.train_attack, cfg, opt.atk_cfg);

  save_checkpoint(outcome.pretrained_model, opt.out_dir / "pretrained.ckpt");
  save_checkpoint(outcome.model, opt.out_dir / "final.ckpt");
  save_checkpoint(outcome.best_model, opt.out_dir / "best.ckpt");
  write_epoch_metrics(opt.out_dir / "metrics.csv", outcome.report);
  write_step_records(opt.out_dir / "steps.csv", outcome.report);

  return {opt.out_dir, std::move(outcome.report)};
}

// ---------------------------------------------------------------------------
// matrix
// ---------------------------------------------------------------------------

MatrixResult run_matrix(const MatrixOptions & opt)
{
  if (opt.runs.empty()) {
    fail_usage("matrix: no run directories given");
  }
  if (opt.eval_attacks.empty()) {
    fail_usage("matrix: no evaluation attacks given");
  }
  const auto scenes = scenario::ingest_scenes(opt.scenes);

  MatrixResult result;
  const attack::AttackType lateral{attack::Kind::kLateral, attack::LateralSign::kRight,
                                   attack::LonSign::kForward};
  for (const auto & run_dir : opt.runs) {
    std::string method = "?";
    std::string train_attack = "?";
    bool present = true;
    PredictorModel pretrained;
    PredictorModel final_model;
    try {
      const Config cfg = Config::from_file(run_dir / "config.txt");
      method = cfg.get_string("run.method", "?");
      train_attack = cfg.get_string("run.train_attack", "?");
      pretrained = load_checkpoint(run_dir / "pretrained.ckpt");
      // Prefer the robustness-selected checkpoint when the run tracked one.
      final_model = load_checkpoint(
        std::filesystem::exists(run_dir / "best.ckpt") ? run_dir / "best.ckpt"
                                                       : run_dir / "final.ckpt");
    } catch (const Error &) {
      present = false;
      result.complete = false;
    }

    double benign_ade = 0.0;
    double intent_err = 0.0;
    std::optional<AttackEvalSummary> lateral_summary;
    if (present) {
      lateral_summary =
        evaluate_scenes(final_model, scenes, lateral, opt.atk_cfg, opt.threads);
      benign_ade = lateral_summary->mean_benign_ade;
      intent_err = lateral_summary->attacked_intent_error;
    }

    for (const auto & type : opt.eval_attacks) {
      MatrixCell cell;
      cell.method = method;
      cell.train_attack = train_attack;
      cell.eval_attack = attack::to_string(type);
      cell.present = present;
      if (present) {
        const AttackEvalSummary after =
          (type == lateral && lateral_summary)
            ? *lateral_summary
            : evaluate_scenes(final_model, scenes, type, opt.atk_cfg, opt.threads);
        const AttackEvalSummary before =
          evaluate_scenes(pretrained, scenes, type, opt.atk_cfg, opt.threads);
        cell.err_before = attacked_error_of(before, type);
        cell.err_after = attacked_error_of(after, type);
        cell.benign_ade = benign_ade;
        cell.intention_error = intent_err;
      }
      result.cells.push_back(std::move(cell));
    }
  }

  std::ofstream out(opt.out);
  if (!out) {
    fail_usage("cannot write matrix file: " + opt.out.string());
  }
  out << "method,train_attack,eval_attack,err_before,err_after,benign_ade,"
         "intention_error,present\n";
  for (const auto & cell : result.cells) {
    out << cell.method << ',' << cell.train_attack << ',' << cell.eval_attack << ',';
    if (cell.present) {
      out << fmt(cell.err_before) << ',' << fmt(cell.err_after) << ','
          << fmt(cell.benign_ade) << ',' << fmt(cell.intention_error) << ",1\n";
    } else {
      out << ",,,,0\n";
    }
  }
  return result;
}

void run_report(const std::filesystem::path & matrix_csv, std::ostream & out)
{
  std::ifstream in(matrix_csv);
  if (!in) {
    fail_usage("cannot open matrix file: " + matrix_csv.string());
  }
  std::string line;
  bool header = true;
  out << "method          train-attack            eval-attack             "
         "before -> after    benign-ade  intent-err\n";
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) {
      cols.push_back(col);
    }
    while (cols.size() < 8) {
      cols.push_back("");
    }
    char buf[256];
    if (cols[7] == "1") {
      std::snprintf(
        buf, sizeof(buf), "%-15s %-23s %-23s %6.2f -> %-6.2f   %9.2f  %9.3f\n",
        cols[0].c_str(), cols[1].c_str(), cols[2].c_str(), std::atof(cols[3].c_str()),
        std::atof(cols[4].c_str()), std::atof(cols[5].c_str()), std::atof(cols[6].c_str()));
    } else {
      std::snprintf(
        buf, sizeof(buf), "%-15s %-23s %-23s (absent)\n", cols[0].c_str(), cols[1].c_str(),
        cols[2].c_str());
    }
    out << buf;
  }
}

}  // namespace ssat::harness
