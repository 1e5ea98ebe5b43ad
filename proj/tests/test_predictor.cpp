#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ssat/error.hpp"
#include "ssat/gradcheck.hpp"
#include "ssat/metrics.hpp"
#include "ssat/predictor.hpp"
#include "ssat/scenario.hpp"

using namespace ssat;
namespace fs = std::filesystem;

namespace
{

ModelConfig tiny_config(std::uint64_t seed = 1)
{
  ModelConfig cfg;
  cfg.embed_width = 8;
  cfg.latent_other_width = 4;
  cfg.hidden_width = 6;
  cfg.conv_channels = 2;
  cfg.context_width = 4;
  cfg.disc_hidden = 3;
  cfg.init_seed = seed;
  return cfg;
}

Scene sample_scene(std::uint64_t seed = 3,
                   scenario::Template tpl = scenario::Template::kStraightFollow)
{
  return scenario::generate_synthetic_scene(seed, tpl);
}

}  // namespace

TEST_CASE("extract_features is deterministic with a stable width")
{
  const PredictorModel model(tiny_config());
  const Scene one_agent = sample_scene(2, scenario::Template::kFreeFlow);
  const Scene follow = sample_scene(2, scenario::Template::kStraightFollow);

  const auto x1 = extract_features(model, one_agent);
  const auto x2 = extract_features(model, one_agent);
  CHECK(x1 == x2);
  CHECK(static_cast<int>(x1.size()) == model.config().embed_width);
  CHECK(static_cast<int>(extract_features(model, follow).size()) ==
        model.config().embed_width);
}

TEST_CASE("extract_features responds smoothly to waypoint nudges")
{
  const PredictorModel model(tiny_config());
  Scene scene = sample_scene(5);
  const auto base = extract_features(model, scene);
  scene.target().history[7].x += 1e-6;
  const auto bumped = extract_features(model, scene);
  double delta = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    delta = std::max(delta, std::abs(bumped[i] - base[i]));
  }
  CHECK(delta > 0.0);
  CHECK(delta < 1e-3);  // O(1e-6) response, generous constant
}

TEST_CASE("encode keeps the latent invariants")
{
  PredictorModel model(tiny_config());
  const Scene scene = sample_scene(9, scenario::Template::kLaneChangeLeft);
  const auto x = extract_features(model, scene);
  const LatentState z = encode(model, x);
  CHECK(z.lon > 0.0);
  CHECK(std::abs(z.lat[0] + z.lat[1] + z.lat[2] - 1.0) < 1e-6);
  CHECK(static_cast<int>(z.other.size()) == model.config().latent_other_width);

  // Zero parameters and zero features give symmetric logits.
  std::fill(model.params().flat_values().begin(), model.params().flat_values().end(), 0.0);
  const std::vector<double> zero_x(static_cast<std::size_t>(model.config().embed_width), 0.0);
  const LatentState z0 = encode(model, zero_x);
  CHECK(z0.lat[0] == doctest::Approx(1.0 / 3.0));
  CHECK(z0.lat[1] == doctest::Approx(1.0 / 3.0));
  CHECK(z0.lat[2] == doctest::Approx(1.0 / 3.0));
  CHECK(z0.lon == doctest::Approx(1.0));
}

TEST_CASE("simplex survives arbitrary parameter updates")
{
  PredictorModel model(tiny_config());
  Rng rng(17);
  const Scene scene = sample_scene(11);
  for (int trial = 0; trial < 10; ++trial) {
    for (auto & v : model.params().flat_values()) {
      v += normal(rng, 0.0, 0.5);
    }
    const LatentState z = encode(model, extract_features(model, scene));
    CHECK(z.lon > 0.0);
    CHECK(std::abs(z.lat[0] + z.lat[1] + z.lat[2] - 1.0) < 1e-6);
    CHECK(z.lat[0] >= 0.0);
    CHECK(z.lat[1] >= 0.0);
    CHECK(z.lat[2] >= 0.0);
  }
}

TEST_CASE("decode yields a fixed-length deterministic future")
{
  const PredictorModel model(tiny_config());
  LatentState z;
  z.lon = 1.3;
  z.lat = {0.2, 0.5, 0.3};
  z.other.assign(static_cast<std::size_t>(model.config().latent_other_width), 0.1);
  const Trajectory a = decode(model, z);
  const Trajectory b = decode(model, z);
  CHECK(a == b);
  CHECK(a.size() == kFutureLen);
}

TEST_CASE("decode gradient in z_lon matches finite differences")
{
  const PredictorModel model(tiny_config());
  std::vector<double> z0{1.1, 0.3, 0.4, 0.3};
  z0.resize(static_cast<std::size_t>(model.config().latent_width()), 0.05);

  const auto f = [&model](std::span<const double> zv) {
    ad::Tape t(model.param_store(), false);
    const std::vector<double> h{1.0, 0.0};
    const std::vector<double> a{0.0, 0.0};
    const ad::Index out =
      model.decode_on_tape(t, t.input(zv), t.constant(h), t.constant(a));
    return t.value(out)[0];
  };
  const auto analytic = [&model](std::span<const double> zv) {
    ad::Tape t(model.param_store(), false);
    const std::vector<double> h{1.0, 0.0};
    const std::vector<double> a{0.0, 0.0};
    const ad::Index z = t.input(zv);
    const ad::Index out = model.decode_on_tape(t, z, t.constant(h), t.constant(a));
    t.backward(t.gather1(out, 0));
    const auto g = t.grad(z);
    return std::vector<double>(g.begin(), g.end());
  };
  const auto rep = gradient_check(f, analytic, z0);
  CHECK(rep.max_rel_error < 1e-4);
}

TEST_CASE("predict composes decode, encode and extract_features exactly")
{
  const PredictorModel model(tiny_config(5));
  for (int tpl = 0; tpl < scenario::kTemplateCount; ++tpl) {
    const Scene scene = sample_scene(21 + tpl, static_cast<scenario::Template>(tpl));
    const Prediction p = predict(model, scene);
    const auto x = extract_features(model, scene);
    const LatentState z = encode(model, x);
    const Trajectory composed = decode(model, z, frame_of(scene));
    CHECK(p.future == composed);  // bit-identical
    CHECK(p.latent.to_vector() == z.to_vector());
    CHECK(p.future.size() == kFutureLen);
    const double benign_ade = metrics::ade(p.future, scene.target().future);
    CHECK(std::isfinite(benign_ade));
    const LateralIntent intent = p.latent.intent();
    CHECK((intent == LateralIntent::kForward || intent == LateralIntent::kLeft ||
           intent == LateralIntent::kRight));
  }
}

TEST_CASE("log-normal prior sampling matches its closed form")
{
  PriorSpec spec;
  Rng rng(123);
  std::vector<double> draws;
  draws.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    draws.push_back(sample_prior(spec, LatentGroup::kLon, rng)[0]);
    CHECK(draws.back() > 0.0);
  }
  std::nth_element(draws.begin(), draws.begin() + draws.size() / 2, draws.end());
  const double median = draws[draws.size() / 2];
  CHECK(std::abs(median - std::exp(0.0682)) < 0.02);

  CHECK(lognormal_pdf(std::exp(0.0682), 0.0682, 0.647) == doctest::Approx(0.5759).epsilon(1e-3));
  CHECK(lognormal_cdf(std::exp(0.0682), 0.0682, 0.647) == doctest::Approx(0.5).epsilon(1e-12));

  const auto lat = sample_prior(spec, LatentGroup::kLat, rng);
  CHECK(lat.size() == 3);
  CHECK(std::count(lat.begin(), lat.end(), 1.0) == 1);
  CHECK(std::count(lat.begin(), lat.end(), 0.0) == 2);

  const auto a = sample_prior(spec, LatentGroup::kOther, std::uint64_t{42});
  const auto b = sample_prior(spec, LatentGroup::kOther, std::uint64_t{42});
  CHECK(a == b);
  CHECK(static_cast<int>(a.size()) == spec.other_width);
}

TEST_CASE("discriminators are clamped probabilities")
{
  PredictorModel model(tiny_config());
  std::fill(model.params().flat_values().begin(), model.params().flat_values().end(), 0.0);
  CHECK(discriminate(model, LatentGroup::kLon, std::vector<double>{1.0}) ==
        doctest::Approx(0.5));

  // Saturated logits stay strictly inside (0, 1).
  PredictorModel wild(tiny_config(9));
  for (auto & v : wild.params().flat_values()) {
    v = 50.0;
  }
  const double p = discriminate(wild, LatentGroup::kLon, std::vector<double>{5.0});
  CHECK(p > 0.0);
  CHECK(p < 1.0);

  CHECK_THROWS_AS(
    discriminate(model, LatentGroup::kLat, std::vector<double>{0.1, 0.9}), Error);
}

TEST_CASE("whole-pipeline gradients survive a spot check")
{
  PredictorModel model(tiny_config(31));
  const Scene scene = sample_scene(31, scenario::Template::kTurn);
  const auto hist_flat = to_flat(scene.target().history);

  // d(sum of future coords)/d(history) against finite differences.
  const auto f = [&](std::span<const double> h) {
    ad::Tape t(model.param_store(), false);
    const ad::Index out = model.future_on_tape(t, scene, t.input(h));
    return t.scalar(t.sum_all(out));
  };
  const auto analytic = [&](std::span<const double> h) {
    ad::Tape t(model.param_store(), false);
    const ad::Index in = t.input(h);
    const ad::Index out = model.future_on_tape(t, scene, in);
    t.backward(t.sum_all(out));
    const auto g = t.grad(in);
    return std::vector<double>(g.begin(), g.end());
  };
  const auto rep = gradient_check(f, analytic, hist_flat);
  CHECK(rep.max_rel_error < 1e-4);
}

TEST_CASE("checkpoints round-trip bit-identically")
{
  const auto dir = fs::temp_directory_path() / "ssat_test_ckpt";
  fs::create_directories(dir);
  const auto path = dir / "model.ckpt";

  const PredictorModel model(tiny_config(77));
  save_checkpoint(model, path);
  const PredictorModel loaded = load_checkpoint(path);
  CHECK(loaded.config() == model.config());
  CHECK(loaded.params().flat_values() == model.params().flat_values());

  const Scene scene = sample_scene(55, scenario::Template::kLaneChangeRight);
  const Prediction a = predict(model, scene);
  const Prediction b = predict(loaded, scene);
  CHECK(a.future == b.future);

  // Corrupt the version field: schema mismatch must be rejected.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char bad[4] = {9, 0, 0, 0};
    f.write(bad, 4);
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
}
