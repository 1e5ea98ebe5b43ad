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

#include "ssat/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "ssat/error.hpp"

namespace ssat
{

namespace
{

constexpr double kPosScale = 0.1;     // meters -> network input units
constexpr double kOutScale = 10.0;    // decoder output units -> meters
constexpr double kHeadingEps = 1e-8;  // smooth normalization of the heading
constexpr double kProbClamp = 1e-7;   // discriminator output clamp

}  // namespace

LateralIntent LatentState::intent() const
{
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (lat[static_cast<std::size_t>(i)] > lat[static_cast<std::size_t>(best)]) {
      best = i;
    }
  }
  return static_cast<LateralIntent>(best);
}

std::vector<double> LatentState::to_vector() const
{
  std::vector<double> v;
  v.reserve(4 + other.size());
  v.push_back(lon);
  v.insert(v.end(), lat.begin(), lat.end());
  v.insert(v.end(), other.begin(), other.end());
  return v;
}

LatentState LatentState::from_vector(std::span<const double> v)
{
  if (v.size() < 4) {
    fail_invariant("LatentState::from_vector: need at least 4 values");
  }
  LatentState z;
  z.lon = v[0];
  z.lat = {v[1], v[2], v[3]};
  z.other.assign(v.begin() + 4, v.end());
  return z;
}

int latent_group_width(LatentGroup group, const ModelConfig & cfg)
{
  switch (group) {
    case LatentGroup::kLon:
      return 1;
    case LatentGroup::kLat:
      return 3;
    default:
      return cfg.latent_other_width;
  }
}

std::vector<double> sample_prior(const PriorSpec & spec, LatentGroup group, Rng & rng)
{
  switch (group) {
    case LatentGroup::kLon:
      return {std::exp(spec.lognormal_mu + spec.lognormal_sigma * normal(rng))};
    case LatentGroup::kLat: {
      const double u = uniform(rng, 0.0, 1.0);
      std::vector<double> v(3, 0.0);
      double cum = 0.0;
      for (int i = 0; i < 3; ++i) {
        cum += spec.lat_probs[static_cast<std::size_t>(i)];
        if (u <= cum || i == 2) {
          v[static_cast<std::size_t>(i)] = 1.0;
          break;
        }
      }
      return v;
    }
    default: {
      std::vector<double> v(static_cast<std::size_t>(spec.other_width));
      for (auto & x : v) {
        x = normal(rng);
      }
      return v;
    }
  }
}

std::vector<double> sample_prior(const PriorSpec & spec, LatentGroup group, std::uint64_t seed)
{
  Rng rng(seed);
  return sample_prior(spec, group, rng);
}

double lognormal_pdf(double x, double mu, double sigma)
{
  if (x <= 0.0) {
    return 0.0;
  }
  const double z = (std::log(x) - mu) / sigma;
  return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * M_PI));
}

double lognormal_cdf(double x, double mu, double sigma)
{
  if (x <= 0.0) {
    return 0.0;
  }
  const double z = (std::log(x) - mu) / (sigma * std::sqrt(2.0));
  return 0.5 * std::erfc(-z);
}

std::array<double, 3> estimate_lat_probs(std::span<const SemanticLabels> labels)
{
  std::array<double, 3> counts{1.0, 1.0, 1.0};  // Laplace smoothing
  double total = 3.0;
  for (const auto & l : labels) {
    if (l.lateral_intent) {
      counts[static_cast<std::size_t>(*l.lateral_intent)] += 1.0;
      total += 1.0;
    }
  }
  for (auto & c : counts) {
    c /= total;
  }
  return counts;
}

FrameContext frame_of(const Scene & scene)
{
  const Trajectory & hist = scene.target().history;
  const Waypoint & anchor = hist[hist.size() - 1];
  const Waypoint & base = hist[hist.size() - 6];
  const double dx = anchor.x - base.x;
  const double dy = anchor.y - base.y;
  const double r = std::sqrt(dx * dx + dy * dy + kHeadingEps);
  return {anchor, {dx / r, dy / r}};
}

Trajectory FuturePredictor::predict_future(const Scene & scene) const
{
  ad::Tape tape(param_store(), false);
  const auto flat = to_flat(scene.target().history);
  const ad::Index hist = tape.constant(flat);
  const ad::Index future = future_on_tape(tape, scene, hist);
  return trajectory_from_flat(tape.value(future));
}

// ---------------------------------------------------------------------------
// ReferenceExtractor
// ---------------------------------------------------------------------------

ReferenceExtractor::ReferenceExtractor(const ModelConfig & cfg, ad::ParamStore & params)
: cfg_(cfg)
{
  const int C = cfg.conv_channels;
  const int ctx = cfg.context_width;
  const int pooled = 2 * C + 2 * ctx;
  conv1_w_ = {params.add_group("extractor.conv1.w", static_cast<std::size_t>(C) * 4 * 3), C, 12};
  conv1_b_ = {params.add_group("extractor.conv1.b", static_cast<std::size_t>(C)), C};
  conv2_w_ = {params.add_group("extractor.conv2.w", static_cast<std::size_t>(C) * C * 3), C, C * 3};
  conv2_b_ = {params.add_group("extractor.conv2.b", static_cast<std::size_t>(C)), C};
  nbr_w_ = {params.add_group("extractor.nbr.w", static_cast<std::size_t>(ctx) * 4), ctx, 4};
  nbr_b_ = {params.add_group("extractor.nbr.b", static_cast<std::size_t>(ctx)), ctx};
  lane_w_ = {params.add_group("extractor.lane.w", static_cast<std::size_t>(ctx) * 12), ctx, 12};
  lane_b_ = {params.add_group("extractor.lane.b", static_cast<std::size_t>(ctx)), ctx};
  out_w_ = {
    params.add_group("extractor.out.w", static_cast<std::size_t>(cfg.embed_width) * pooled),
    cfg.embed_width, pooled};
  out_b_ = {params.add_group("extractor.out.b", static_cast<std::size_t>(cfg.embed_width)),
            cfg.embed_width};
}

ad::Index ReferenceExtractor::build(
  ad::Tape & tape, const Scene & scene, ad::Index history) const
{
  const int T = kHistoryLen;
  const int C = cfg_.conv_channels;
  if (tape.size(history) != 2 * T) {
    fail_invariant("ReferenceExtractor: history node must have 2*H values");
  }

  const ad::Index anchor = tape.slice(history, 2 * T - 2, 2);
  const ad::Index offsets = tape.sub_last_pair(history);
  const ad::Index diffs = tape.seq_diffs(history);
  // Heading over a half-second baseline; a single frame step is too easy to
  // spoof with small perturbations.
  const ad::Index heading = tape.normalize2_smooth(
    tape.sub(anchor, tape.slice(history, 2 * (T - 6), 2)), kHeadingEps);

  const ad::Index local_off =
    tape.scale(tape.rotate_pairs(heading, offsets), kPosScale);
  const ad::Index local_vel = tape.rotate_pairs(heading, diffs);
  const std::array<ad::Index, 2> chans{
    tape.pairs_to_channels(local_off), tape.pairs_to_channels(local_vel)};
  const ad::Index conv_in = tape.concat(chans);

  const ad::Index c1 = tape.tanh_op(tape.conv1d_same(conv1_w_, conv1_b_, conv_in, 4, T, 3, 1));
  const ad::Index c2 = tape.tanh_op(tape.conv1d_same(conv2_w_, conv2_b_, c1, C, T, 3, 2));
  const ad::Index t_mean = tape.time_mean(c2, C, T);
  const ad::Index t_last = tape.time_last(c2, C, T);

  // Neighbors: shared encoding of relative pose at the anchor frame, mean-pooled.
  std::vector<ad::Index> encs;
  for (const auto & agent : scene.agents) {
    if (agent.id == scene.target_id) {
      continue;
    }
    const Waypoint & last = agent.history[kHistoryLen - 1];
    const Waypoint vel = last - agent.history[kHistoryLen - 2];
    const std::array<double, 2> pos{last.x, last.y};
    const std::array<double, 2> v{vel.x, vel.y};
    const ad::Index rel = tape.sub(tape.constant(pos), anchor);
    const ad::Index local_rel = tape.scale(tape.rotate_pairs(heading, rel), kPosScale);
    const ad::Index local_v = tape.rotate_pairs(heading, tape.constant(v));
    const std::array<ad::Index, 2> in{local_rel, local_v};
    encs.push_back(tape.tanh_op(tape.affine(nbr_w_, nbr_b_, tape.concat(in))));
  }
  ad::Index nbr_pool;
  if (encs.empty()) {
    const std::vector<double> zeros(static_cast<std::size_t>(cfg_.context_width), 0.0);
    nbr_pool = tape.constant(zeros);
  } else {
    nbr_pool = tape.scale(tape.sum_list(encs), 1.0 / static_cast<double>(encs.size()));
  }

  // Nearest lane points to probe positions along the heading (0, 8, 16 m
  // lookahead). Selection is value-level, like max-pool; the offsets stay
  // differentiable through the anchor and heading.
  ad::Index lane_enc;
  if (scene.map.lanes.empty()) {
    const std::vector<double> zeros(static_cast<std::size_t>(cfg_.context_width), 0.0);
    lane_enc = tape.constant(zeros);
  } else {
    const Waypoint a{tape.value(anchor)[0], tape.value(anchor)[1]};
    const Waypoint h{tape.value(heading)[0], tape.value(heading)[1]};
    std::vector<ad::Index> probes;
    for (const double ahead : {0.0, 8.0, 16.0}) {
      const Waypoint probe = a + ahead * h;
      Waypoint best_pt;
      Waypoint best_dir{1.0, 0.0};
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto & lane : scene.map.lanes) {
        for (std::size_t i = 0; i < lane.points.size(); ++i) {
          const double d = distance(lane.points[i], probe);
          if (d < best_d) {
            best_d = d;
            best_pt = lane.points[i];
            const std::size_t j = i + 1 < lane.points.size() ? i + 1 : i;
            const std::size_t k = j == i ? i - 1 : i;
            const Waypoint seg = lane.points[j] - lane.points[k];
            const double len = norm(seg);
            best_dir = len > 0.0 ? (1.0 / len) * seg : Waypoint{1.0, 0.0};
          }
        }
      }
      const std::array<double, 2> pt{best_pt.x, best_pt.y};
      const std::array<double, 2> dir{best_dir.x, best_dir.y};
      const ad::Index probe_pos =
        tape.add(anchor, tape.scale(heading, ahead));
      const ad::Index rel = tape.sub(tape.constant(pt), probe_pos);
      probes.push_back(tape.scale(tape.rotate_pairs(heading, rel), kPosScale));
      probes.push_back(tape.rotate_pairs(heading, tape.constant(dir)));
    }
    lane_enc = tape.tanh_op(tape.affine(lane_w_, lane_b_, tape.concat(probes)));
  }

  const std::array<ad::Index, 4> pooled{t_mean, t_last, nbr_pool, lane_enc};
  return tape.tanh_op(tape.affine(out_w_, out_b_, tape.concat(pooled)));
}

// ---------------------------------------------------------------------------
// PredictorModel
// ---------------------------------------------------------------------------

PredictorModel::PredictorModel(const ModelConfig & cfg) : cfg_(cfg)
{
  register_params();
  init_params();
}

void PredictorModel::register_params()
{
  extractor_ = std::make_shared<const ReferenceExtractor>(cfg_, params_);

  const int E = cfg_.embed_width;
  const int H = cfg_.hidden_width;
  const int K = cfg_.latent_other_width;
  const int Z = cfg_.latent_width();
  const int F2 = 2 * kFutureLen;

  auto mat = [this](const std::string & name, int rows, int cols) {
    return ad::MatRef{
      params_.add_group(name, static_cast<std::size_t>(rows) * cols), rows, cols};
  };
  auto vec = [this](const std::string & name, int size) {
    return ad::VecRef{params_.add_group(name, static_cast<std::size_t>(size)), size};
  };

  enc_h_w_ = mat("encoder.h.w", H, E);
  enc_h_b_ = vec("encoder.h.b", H);
  enc_lon_w_ = mat("encoder.lon.w", 1, H);
  enc_lon_b_ = vec("encoder.lon.b", 1);
  enc_lat_w_ = mat("encoder.lat.w", 3, H);
  enc_lat_b_ = vec("encoder.lat.b", 3);
  enc_other_w_ = mat("encoder.other.w", K, H);
  enc_other_b_ = vec("encoder.other.b", K);
  dec_h_w_ = mat("decoder.h.w", H, Z);
  dec_h_b_ = vec("decoder.h.b", H);
  dec_out_w_ = mat("decoder.out.w", F2, H);
  dec_out_b_ = vec("decoder.out.b", F2);

  first_disc_group_ = params_.groups().size();
  const std::array<std::string, 3> names{"disc.lon", "disc.lat", "disc.other"};
  for (int g = 0; g < 3; ++g) {
    const int in = latent_group_width(static_cast<LatentGroup>(g), cfg_);
    disc_h_w_[static_cast<std::size_t>(g)] = mat(names[static_cast<std::size_t>(g)] + ".h.w", cfg_.disc_hidden, in);
    disc_h_b_[static_cast<std::size_t>(g)] = vec(names[static_cast<std::size_t>(g)] + ".h.b", cfg_.disc_hidden);
    disc_out_w_[static_cast<std::size_t>(g)] = mat(names[static_cast<std::size_t>(g)] + ".out.w", 1, cfg_.disc_hidden);
    disc_out_b_[static_cast<std::size_t>(g)] = vec(names[static_cast<std::size_t>(g)] + ".out.b", 1);
  }
}

void PredictorModel::init_params()
{
  Rng rng(cfg_.init_seed);
  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] in registration
  // order; biases stay zero.
  auto init_mat = [this, &rng](const ad::MatRef & m) {
    const double r = 1.0 / std::sqrt(static_cast<double>(m.cols));
    for (auto & v : params_.values(m.group)) {
      v = uniform(rng, -r, r);
    }
  };
  // Extractor matrices share the store; re-derive their refs by name.
  auto mat_by_name = [this](const std::string & name, int rows, int cols) {
    return ad::MatRef{params_.group_index(name), rows, cols};
  };
  const int C = cfg_.conv_channels;
  const int ctx = cfg_.context_width;
  init_mat(mat_by_name("extractor.conv1.w", C, 12));
  init_mat(mat_by_name("extractor.conv2.w", C, C * 3));
  init_mat(mat_by_name("extractor.nbr.w", ctx, 4));
  init_mat(mat_by_name("extractor.lane.w", ctx, 4));
  init_mat(mat_by_name("extractor.out.w", cfg_.embed_width, 2 * C + 2 * ctx));
  init_mat(enc_h_w_);
  init_mat(enc_lon_w_);
  init_mat(enc_lat_w_);
  init_mat(enc_other_w_);
  init_mat(dec_h_w_);
  init_mat(dec_out_w_);
  for (int g = 0; g < 3; ++g) {
    init_mat(disc_h_w_[static_cast<std::size_t>(g)]);
    init_mat(disc_out_w_[static_cast<std::size_t>(g)]);
  }
  // Warm-start the decoder bias at a constant-velocity rollout (10 m/s along
  // the heading) so early predictions are physical instead of collapsed.
  auto dec_bias = params_.values(dec_out_b_.group);
  for (int f = 0; f < kFutureLen; ++f) {
    dec_bias[static_cast<std::size_t>(2 * f)] =
      10.0 * (f + 1) * kFrameDt / kOutScale;
  }
}

ad::Index PredictorModel::features_on_tape(
  ad::Tape & tape, const Scene & scene, ad::Index history) const
{
  return extractor_->build(tape, scene, history);
}

ad::Index PredictorModel::latent_on_tape(ad::Tape & tape, ad::Index features) const
{
  if (tape.size(features) != cfg_.embed_width) {
    fail_invariant("latent_on_tape: feature width mismatch");
  }
  const ad::Index hid = tape.tanh_op(tape.affine(enc_h_w_, enc_h_b_, features));
  // Positivity through a range-limited exponential: exp(3 tanh(raw / 3))
  // keeps z_lon in (e^-3, e^3) so the squared headway loss cannot blow up.
  const ad::Index lon_raw = tape.affine(enc_lon_w_, enc_lon_b_, hid);
  const ad::Index lon = tape.exp_op(tape.scale(tape.tanh_op(tape.scale(lon_raw, 1.0 / 3.0)), 3.0));
  const ad::Index lat = tape.softmax_op(tape.affine(enc_lat_w_, enc_lat_b_, hid));
  const ad::Index other = tape.affine(enc_other_w_, enc_other_b_, hid);
  const std::array<ad::Index, 3> parts{lon, lat, other};
  return tape.concat(parts);
}

ad::Index PredictorModel::decode_on_tape(
  ad::Tape & tape, ad::Index latent, ad::Index heading, ad::Index anchor) const
{
  if (tape.size(latent) != cfg_.latent_width()) {
    fail_invariant("decode_on_tape: latent width mismatch");
  }
  const ad::Index hid = tape.tanh_op(tape.affine(dec_h_w_, dec_h_b_, latent));
  const ad::Index local = tape.scale(tape.affine(dec_out_w_, dec_out_b_, hid), kOutScale);
  return tape.unrotate_pairs_add(heading, anchor, local);
}

ad::Index PredictorModel::future_on_tape(
  ad::Tape & tape, const Scene & scene, ad::Index history) const
{
  const ad::Index x = features_on_tape(tape, scene, history);
  const ad::Index z = latent_on_tape(tape, x);
  const ad::Index anchor = tape.slice(history, 2 * kHistoryLen - 2, 2);
  const ad::Index heading = tape.normalize2_smooth(
    tape.sub(anchor, tape.slice(history, 2 * (kHistoryLen - 6), 2)), kHeadingEps);
  return decode_on_tape(tape, z, heading, anchor);
}

ad::Index PredictorModel::discriminator_on_tape(
  ad::Tape & tape, LatentGroup group, ad::Index value) const
{
  const int expected = latent_group_width(group, cfg_);
  if (tape.size(value) != expected) {
    fail_invariant(
      "discriminator width mismatch: group expects " + std::to_string(expected) +
      " values, got " + std::to_string(tape.size(value)));
  }
  const auto g = static_cast<std::size_t>(group);
  const ad::Index hid = tape.tanh_op(tape.affine(disc_h_w_[g], disc_h_b_[g], value));
  const ad::Index logit = tape.affine(disc_out_w_[g], disc_out_b_[g], hid);
  return tape.clamp_op(tape.sigmoid_op(logit), kProbClamp, 1.0 - kProbClamp);
}

bool PredictorModel::is_discriminator_group(std::size_t group_index) const
{
  return group_index >= first_disc_group_;
}

// ---------------------------------------------------------------------------
// Plain (value-level) operations
// ---------------------------------------------------------------------------

std::vector<double> extract_features(const PredictorModel & model, const Scene & scene)
{
  ad::Tape tape(model.param_store(), false);
  const auto flat = to_flat(scene.target().history);
  const ad::Index x = model.features_on_tape(tape, scene, tape.constant(flat));
  const auto v = tape.value(x);
  return {v.begin(), v.end()};
}

LatentState encode(const PredictorModel & model, std::span<const double> features)
{
  if (static_cast<int>(features.size()) != model.config().embed_width) {
    fail_invariant("encode: feature width mismatch");
  }
  ad::Tape tape(model.param_store(), false);
  const ad::Index z = model.latent_on_tape(tape, tape.constant(features));
  return LatentState::from_vector(tape.value(z));
}

Trajectory decode(const PredictorModel & model, const LatentState & z, const FrameContext & frame)
{
  ad::Tape tape(model.param_store(), false);
  const auto zv = z.to_vector();
  const std::array<double, 2> h{frame.heading.x, frame.heading.y};
  const std::array<double, 2> a{frame.anchor.x, frame.anchor.y};
  const ad::Index out = model.decode_on_tape(
    tape, tape.constant(zv), tape.constant(h), tape.constant(a));
  return trajectory_from_flat(tape.value(out));
}

double discriminate(
  const PredictorModel & model, LatentGroup group, std::span<const double> value)
{
  ad::Tape tape(model.param_store(), false);
  const ad::Index p = model.discriminator_on_tape(tape, group, tape.constant(value));
  return tape.scalar(p);
}

Prediction predict(const PredictorModel & model, const Scene & scene)
{
  ad::Tape tape(model.param_store(), false);
  const auto flat = to_flat(scene.target().history);
  const ad::Index hist = tape.constant(flat);
  const ad::Index x = model.features_on_tape(tape, scene, hist);
  const ad::Index z = model.latent_on_tape(tape, x);
  const ad::Index anchor = tape.slice(hist, 2 * kHistoryLen - 2, 2);
  const ad::Index heading = tape.normalize2_smooth(
    tape.sub(anchor, tape.slice(hist, 2 * (kHistoryLen - 6), 2)), kHeadingEps);
  const ad::Index future = model.decode_on_tape(tape, z, heading, anchor);
  Prediction out;
  out.future = trajectory_from_flat(tape.value(future));
  out.latent = LatentState::from_vector(tape.value(z));
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O: magic, schema version, config, length-prefixed f64 groups.
// ---------------------------------------------------------------------------

namespace
{

constexpr char kMagic[8] = {'S', 'S', 'A', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::ofstream & out, std::uint32_t v)
{
  char b[4];
  for (int i = 0; i < 4; ++i) {
    b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(b, 4);
}

void put_u64(std::ofstream & out, std::uint64_t v)
{
  char b[8];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(b, 8);
}

void put_f64(std::ofstream & out, double v)
{
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::ifstream & in)
{
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(std::ifstream & in)
{
  unsigned char b[8];
  in.read(reinterpret_cast<char *>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  return v;
}

double get_f64(std::ifstream & in)
{
  return std::bit_cast<double>(get_u64(in));
}

}  // namespace

void save_checkpoint(const PredictorModel & model, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail_usage("cannot write checkpoint: " + path.string());
  }
  out.write(kMagic, 8);
  put_u32(out, kCheckpointVersion);
  const auto & cfg = model.config();
  put_u32(out, static_cast<std::uint32_t>(cfg.embed_width));
  put_u32(out, static_cast<std::uint32_t>(cfg.latent_other_width));
  put_u32(out, static_cast<std::uint32_t>(cfg.hidden_width));
  put_u32(out, static_cast<std::uint32_t>(cfg.conv_channels));
  put_u32(out, static_cast<std::uint32_t>(cfg.context_width));
  put_u32(out, static_cast<std::uint32_t>(cfg.disc_hidden));
  put_u64(out, cfg.init_seed);
  const auto & store = model.params();
  put_u32(out, static_cast<std::uint32_t>(store.groups().size()));
  for (const auto & group : store.groups()) {
    put_u32(out, static_cast<std::uint32_t>(group.name.size()));
    out.write(group.name.data(), static_cast<std::streamsize>(group.name.size()));
    put_u64(out, group.size);
    const auto values = store.values(store.group_index(group.name));
    for (double v : values) {
      put_f64(out, v);
    }
  }
  if (!out) {
    fail_usage("failed while writing checkpoint: " + path.string());
  }
}

PredictorModel load_checkpoint(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail_artifact("cannot open checkpoint: " + path.string());
  }
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    fail_artifact("not a checkpoint file: " + path.string());
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    fail_artifact(
      "checkpoint schema version " + std::to_string(version) + " unsupported (expected " +
      std::to_string(kCheckpointVersion) + "): " + path.string());
  }
  ModelConfig cfg;
  cfg.embed_width = static_cast<int>(get_u32(in));
  cfg.latent_other_width = static_cast<int>(get_u32(in));
  cfg.hidden_width = static_cast<int>(get_u32(in));
  cfg.conv_channels = static_cast<int>(get_u32(in));
  cfg.context_width = static_cast<int>(get_u32(in));
  cfg.disc_hidden = static_cast<int>(get_u32(in));
  cfg.init_seed = get_u64(in);
  PredictorModel model(cfg);
  auto & store = model.params();
  const std::uint32_t n_groups = get_u32(in);
  if (n_groups != store.groups().size()) {
    fail_artifact("checkpoint group count mismatch: " + path.string());
  }
  for (std::uint32_t g = 0; g < n_groups; ++g) {
    const std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint64_t count = get_u64(in);
    const auto & expected = store.groups()[g];
    if (name != expected.name || count != expected.size) {
      fail_artifact(
        "checkpoint group " + name + " does not match expected layout: " + path.string());
    }
    auto values = store.values(g);
    for (auto & v : values) {
      v = get_f64(in);
    }
  }
  if (!in) {
    fail_artifact("truncated checkpoint: " + path.string());
  }
  return model;
}

}  // namespace ssat
