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

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssat/config.hpp"
#include "ssat/error.hpp"
#include "ssat/harness.hpp"

namespace fs = std::filesystem;
using namespace ssat;

namespace
{

struct GlobalArgs
{
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  std::string out_dir;
};

fs::path resolve(const GlobalArgs & g, const std::string & path)
{
  fs::path p(path);
  if (!g.out_dir.empty() && p.is_relative()) {
    return fs::path(g.out_dir) / p;
  }
  return p;
}

Config load_config(const GlobalArgs & g)
{
  if (g.config_path.empty()) {
    return {};
  }
  return Config::from_file(g.config_path);
}

ModelConfig model_config_from(const Config & cfg)
{
  ModelConfig m;
  m.embed_width = cfg.get_int("model.embed_width", m.embed_width);
  m.latent_other_width = cfg.get_int("model.latent_other_width", m.latent_other_width);
  m.hidden_width = cfg.get_int("model.hidden_width", m.hidden_width);
  m.conv_channels = cfg.get_int("model.conv_channels", m.conv_channels);
  m.context_width = cfg.get_int("model.context_width", m.context_width);
  m.disc_hidden = cfg.get_int("model.disc_hidden", m.disc_hidden);
  m.init_seed = cfg.get_u64("model.init_seed", m.init_seed);
  return m;
}

train::TrainConfig train_config_from(const Config & cfg)
{
  train::TrainConfig t;
  t.success_threshold = cfg.get_double("train.success_threshold", t.success_threshold);
  t.lambda_traj = cfg.get_double("train.lambda_traj", t.lambda_traj);
  t.lambda_semi = cfg.get_double("train.lambda_semi", t.lambda_semi);
  t.lambda_reg = cfg.get_double("train.lambda_reg", t.lambda_reg);
  t.lambda_semi_boost = cfg.get_double("train.lambda_semi_boost", t.lambda_semi_boost);
  t.mixup_enabled = cfg.get_bool("train.mixup_enabled", t.mixup_enabled);
  t.mixup_lambda = cfg.get_double("train.mixup_lambda", t.mixup_lambda);
  t.mixup_beta_mode = cfg.get_bool("train.mixup_beta_mode", t.mixup_beta_mode);
  t.mixup_beta_alpha = cfg.get_double("train.mixup_beta_alpha", t.mixup_beta_alpha);
  t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
  t.lr_decay = cfg.get_double("train.lr_decay", t.lr_decay);
  t.epochs = cfg.get_int("train.epochs", t.epochs);
  t.pretrain_epochs = cfg.get_int("train.pretrain_epochs", t.pretrain_epochs);
  t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
  t.seed = cfg.get_u64("train.seed", t.seed);
  t.eval_subset = cfg.get_int("train.eval_subset", t.eval_subset);
  return t;
}

attack::AttackConfig attack_config_from(const Config & cfg)
{
  attack::AttackConfig a;
  a.epsilon = cfg.get_double("attack.epsilon", a.epsilon);
  a.iterations = cfg.get_int("attack.iterations", a.iterations);
  a.step_size = cfg.get_double("attack.step_size", a.step_size);
  a.keep_best = cfg.get_bool("attack.keep_best", a.keep_best);
  a.seed = cfg.get_u64("attack.seed", a.seed);
  a.random_start = cfg.get_bool("attack.random_start", a.random_start);
  return a;
}

attack::AttackType parse_attack_type(const std::string & name)
{
  const auto type = attack::attack_type_from_string(name);
  if (!type) {
    fail_usage("unknown attack type: " + name);
  }
  return *type;
}

std::map<std::string, double> parse_mix(const std::string & spec)
{
  std::map<std::string, double> mix;
  if (spec.empty()) {
    return mix;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      fail_usage("mix entries must be template=weight: " + item);
    }
    mix[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return mix;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Semantics-guided adversarial training for trajectory prediction"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs global;
  app.add_option("--seed", global.seed, "Base random seed")->each([&](const std::string &) {
    global.seed_given = true;
  });
  app.add_option("--config", global.config_path, "Flat key = value config file");
  app.add_option("--out", global.out_dir, "Base directory for relative output paths");

  // generate
  auto * gen = app.add_subcommand("generate", "Write a synthetic scene dataset");
  int gen_count = 0;
  std::string gen_out;
  std::string gen_mix;
  gen->add_option("--count", gen_count, "Number of scenes");
  gen->add_option("--out-file", gen_out, "Scenes csv path")->required();
  gen->add_option("--mix", gen_mix, "Template mix, e.g. straight-follow=2,turn=1");

  // attack
  auto * atk = app.add_subcommand("attack", "Attack a checkpoint over a scene file");
  std::string atk_ckpt;
  std::string atk_scenes;
  std::string atk_type = "ade";
  std::string atk_out = "attack_metrics.csv";
  std::string atk_plots;
  int atk_threads = 1;
  double atk_eps = -1.0;
  int atk_iters = -1;
  double atk_step = -1.0;
  atk->add_option("--checkpoint", atk_ckpt, "Model checkpoint")->required();
  atk->add_option("--scenes", atk_scenes, "Scenes csv")->required();
  atk->add_option("--type", atk_type, "ade | lateral[-right|-left] | longitudinal[-forward|-backward]");
  atk->add_option("--out-file", atk_out, "Metrics csv path");
  atk->add_option("--plots", atk_plots, "Directory for per-scene overlay SVGs");
  atk->add_option("--threads", atk_threads, "Worker threads for evaluation");
  atk->add_option("--epsilon", atk_eps, "Per-waypoint deviation budget (m)");
  atk->add_option("--iterations", atk_iters, "PGD iterations");
  atk->add_option("--step-size", atk_step, "PGD step size (m)");

  // train
  auto * trn = app.add_subcommand("train", "Run adversarial training");
  std::string trn_scenes;
  std::string trn_method = "SSAT";
  std::string trn_attack = "ade";
  std::string trn_out = "run";
  trn->add_option("--scenes", trn_scenes, "Training scenes csv")->required();
  trn->add_option("--method", trn_method, "AT-baseline | SSAT | Unsup-SSAT | Mixup-SSAT");
  trn->add_option("--attack-type", trn_attack, "Attack trained against");
  trn->add_option("--out-dir", trn_out, "Run directory");

  // matrix
  auto * mtx = app.add_subcommand("matrix", "Cross-attack evaluation matrix over runs");
  std::vector<std::string> mtx_runs;
  std::string mtx_scenes;
  std::string mtx_out = "matrix.csv";
  std::string mtx_evals = "ade,lateral-right,longitudinal-forward";
  int mtx_threads = 1;
  mtx->add_option("--runs", mtx_runs, "Run directories")->required()->delimiter(',');
  mtx->add_option("--scenes", mtx_scenes, "Held-out scenes csv")->required();
  mtx->add_option("--out-file", mtx_out, "Matrix csv path");
  mtx->add_option("--eval-attacks", mtx_evals, "Comma-separated attack list");
  mtx->add_option("--threads", mtx_threads, "Worker threads");

  // report
  auto * rep = app.add_subcommand("report", "Render a matrix csv as text");
  std::string rep_matrix;
  rep->add_option("--matrix", rep_matrix, "Matrix csv path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    const Config cfg = load_config(global);

    if (gen->parsed()) {
      harness::GenerateOptions opt;
      opt.count = gen_count > 0 ? gen_count : cfg.get_int("data.count", 0);
      opt.seed = global.seed_given ? global.seed : cfg.get_u64("data.seed", global.seed);
      opt.out = resolve(global, gen_out);
      opt.mix = parse_mix(!gen_mix.empty() ? gen_mix : cfg.get_string("data.mix", ""));
      const auto summary = harness::run_generate(opt);
      for (const auto & [tpl, count] : summary.per_template) {
        std::cout << tpl << ": " << count << "\n";
      }
      std::cout << "wrote " << opt.out.string() << " and "
                << scenario::map_path_for(opt.out).string() << "\n";
    } else if (atk->parsed()) {
      harness::AttackEvalOptions opt;
      opt.checkpoint = resolve(global, atk_ckpt);
      opt.scenes = resolve(global, atk_scenes);
      opt.type = parse_attack_type(atk_type);
      opt.atk = attack_config_from(cfg);
      if (atk_eps > 0.0) opt.atk.epsilon = atk_eps;
      if (atk_iters >= 0) opt.atk.iterations = atk_iters;
      if (atk_step > 0.0) opt.atk.step_size = atk_step;
      if (global.seed_given) opt.atk.seed = global.seed;
      opt.out_metrics = resolve(global, atk_out);
      if (!atk_plots.empty()) {
        opt.plot_dir = resolve(global, atk_plots);
      }
      opt.threads = atk_threads;
      const auto summary = harness::run_attack_eval(opt);
      std::cout << "scenes: " << summary.rows.size()
                << "  benign ADE: " << summary.mean_benign_ade
                << "  attacked ADE: " << summary.mean_attacked_ade << "\n";
      std::cout << "wrote " << opt.out_metrics.string() << "\n";
    } else if (trn->parsed()) {
      harness::TrainRunOptions opt;
      const auto method = harness::method_from_string(trn_method);
      if (!method) {
        fail_usage("unknown method: " + trn_method);
      }
      opt.method = *method;
      opt.train_attack = parse_attack_type(trn_attack);
      opt.train_scenes = resolve(global, trn_scenes);
      opt.out_dir = resolve(global, trn_out);
      opt.model_cfg = model_config_from(cfg);
      opt.train_cfg = train_config_from(cfg);
      if (global.seed_given) {
        opt.train_cfg.seed = global.seed;
        opt.model_cfg.init_seed = mix_seed(global.seed, 0x30de1);
      }
      opt.atk_cfg = attack_config_from(cfg);
      const auto result = harness::run_train(opt);
      std::cout << "run directory: " << result.run_dir.string() << "\n";
      if (!result.report.epochs.empty()) {
        const auto & last = result.report.epochs.back();
        std::cout << "final benign ADE: " << last.benign_ade
                  << "  attacked ADE: " << last.attacked_ade << "\n";
      }
    } else if (mtx->parsed()) {
      harness::MatrixOptions opt;
      for (const auto & r : mtx_runs) {
        opt.runs.push_back(resolve(global, r));
      }
      opt.scenes = resolve(global, mtx_scenes);
      std::stringstream ss(mtx_evals);
      std::string item;
      while (std::getline(ss, item, ',')) {
        opt.eval_attacks.push_back(parse_attack_type(item));
      }
      opt.atk_cfg = attack_config_from(cfg);
      if (global.seed_given) opt.atk_cfg.seed = global.seed;
      opt.out = resolve(global, mtx_out);
      opt.threads = mtx_threads;
      const auto result = harness::run_matrix(opt);
      std::cout << "wrote " << opt.out.string() << "\n";
      if (!result.complete) {
        fail_artifact("matrix has absent cells (missing or unreadable runs)");
      }
    } else if (rep->parsed()) {
      harness::run_report(resolve(global, rep_matrix), std::cout);
    }
  } catch (const Error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
