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

#ifndef SSAT_PREDICTOR_HPP_
#define SSAT_PREDICTOR_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "ssat/rng.hpp"
#include "ssat/scene.hpp"
#include "ssat/tape.hpp"

namespace ssat
{

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ModelConfig
{
  int embed_width = 64;         // E, feature vector width
  int latent_other_width = 16;  // K, Gaussian latent width
  int hidden_width = 32;        // encoder/decoder hidden layer
  int conv_channels = 8;
  int context_width = 16;       // neighbor / lane encodings
  int disc_hidden = 8;
  std::uint64_t init_seed = 1;

  int latent_width() const { return 4 + latent_other_width; }  // lon(1) + lat(3) + other

  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

// Three-way semantic latent split: positive longitudinal scalar, lateral
// simplex over (forward, left, right), Gaussian remainder.
struct LatentState
{
  double lon = 1.0;
  std::array<double, 3> lat{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::vector<double> other;

  LateralIntent intent() const;
  std::vector<double> to_vector() const;
  static LatentState from_vector(std::span<const double> v);
};

enum class LatentGroup { kLon = 0, kLat = 1, kOther = 2 };
inline constexpr int kLatentGroupCount = 3;

int latent_group_width(LatentGroup group, const ModelConfig & cfg);

// Target distributions the latent groups are regularized toward.
struct PriorSpec
{
  double lognormal_mu = 0.0682;    // location of the headway log-normal
  double lognormal_sigma = 0.647;  // scale of the headway log-normal
  std::array<double, 3> lat_probs{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  int other_width = 16;
};

std::vector<double> sample_prior(const PriorSpec & spec, LatentGroup group, Rng & rng);
std::vector<double> sample_prior(const PriorSpec & spec, LatentGroup group, std::uint64_t seed);

double lognormal_pdf(double x, double mu, double sigma);
double lognormal_cdf(double x, double mu, double sigma);

// Estimate lateral class probabilities from labeled scenes (uniform fallback).
std::array<double, 3> estimate_lat_probs(std::span<const SemanticLabels> labels);

// Pose of the target at the end of history: trajectory-frame anchor plus a
// smooth-normalized heading. decode() maps local decoder output through this.
struct FrameContext
{
  Waypoint anchor{0.0, 0.0};
  Waypoint heading{1.0, 0.0};

  static FrameContext identity() { return {}; }
};

FrameContext frame_of(const Scene & scene);

// Anything that can predict a future trajectory differentiably from the
// target history; the PGD attack is written against this surface.
class FuturePredictor
{
public:
  virtual ~FuturePredictor() = default;

  // `history` is a tape node of width 2 * kHistoryLen laid out [x0,y0,...].
  // Returns a node of width 2 * kFutureLen in map-frame coordinates.
  virtual ad::Index future_on_tape(ad::Tape & tape, const Scene & scene, ad::Index history) const = 0;

  // Store the evaluation tapes bind to; read-only during attacks. Parameter-
  // free predictors return nullptr.
  virtual ad::ParamStore * param_store() const { return nullptr; }

  Trajectory predict_future(const Scene & scene) const;
};

class FeatureExtractor
{
public:
  virtual ~FeatureExtractor() = default;
  virtual int feature_width() const = 0;
  virtual ad::Index build(ad::Tape & tape, const Scene & scene, ad::Index history) const = 0;
};

// Temporal dilated convolution over the localized target history plus pooled
// neighbor relative positions and nearest-lane offsets.
class ReferenceExtractor final : public FeatureExtractor
{
public:
  ReferenceExtractor(const ModelConfig & cfg, ad::ParamStore & params);

  int feature_width() const override { return cfg_.embed_width; }
  ad::Index build(ad::Tape & tape, const Scene & scene, ad::Index history) const override;

private:
  ModelConfig cfg_;
  ad::MatRef conv1_w_, conv2_w_, nbr_w_, lane_w_, out_w_;
  ad::VecRef conv1_b_, conv2_b_, nbr_b_, lane_b_, out_b_;
};

// Encoder to the semantic latent space, decoder back to trajectories, and
// per-latent-group discriminators, all over one parameter store.
class PredictorModel : public FuturePredictor
{
public:
  explicit PredictorModel(const ModelConfig & cfg = {});

  const ModelConfig & config() const { return cfg_; }
  ad::ParamStore & params() { return params_; }
  const ad::ParamStore & params() const { return params_; }
  ad::ParamStore * param_store() const override
  {
    return const_cast<ad::ParamStore *>(&params_);
  }

  ad::Index features_on_tape(ad::Tape & tape, const Scene & scene, ad::Index history) const;
  // Feature vector -> latent vector [lon, lat0..2, other...] of width 4 + K.
  ad::Index latent_on_tape(ad::Tape & tape, ad::Index features) const;
  // Latent -> map-frame future through the given pose nodes (each width 2).
  ad::Index decode_on_tape(
    ad::Tape & tape, ad::Index latent, ad::Index heading, ad::Index anchor) const;
  ad::Index future_on_tape(ad::Tape & tape, const Scene & scene, ad::Index history) const override;
  // Probability node in (0,1) for one latent group's discriminator.
  ad::Index discriminator_on_tape(ad::Tape & tape, LatentGroup group, ad::Index value) const;

  // True when every discriminator parameter group contains `offset`.
  bool is_discriminator_group(std::size_t group_index) const;

private:
  void register_params();
  void init_params();

  ModelConfig cfg_;
  ad::ParamStore params_;
  std::shared_ptr<const ReferenceExtractor> extractor_;
  ad::MatRef enc_h_w_, enc_lon_w_, enc_lat_w_, enc_other_w_, dec_h_w_, dec_out_w_;
  ad::VecRef enc_h_b_, enc_lon_b_, enc_lat_b_, enc_other_b_, dec_h_b_, dec_out_b_;
  std::array<ad::MatRef, 3> disc_h_w_, disc_out_w_;
  std::array<ad::VecRef, 3> disc_h_b_, disc_out_b_;
  std::size_t first_disc_group_ = 0;
};

std::vector<double> extract_features(const PredictorModel & model, const Scene & scene);
LatentState encode(const PredictorModel & model, std::span<const double> features);
Trajectory decode(
  const PredictorModel & model, const LatentState & z,
  const FrameContext & frame = FrameContext::identity());
double discriminate(
  const PredictorModel & model, LatentGroup group, std::span<const double> value);

struct Prediction
{
  Trajectory future;
  LatentState latent;
};

// decode . encode . extract_features through the scene's own frame.
Prediction predict(const PredictorModel & model, const Scene & scene);

void save_checkpoint(const PredictorModel & model, const std::filesystem::path & path);
PredictorModel load_checkpoint(const std::filesystem::path & path);

}  // namespace ssat

#endif  // SSAT_PREDICTOR_HPP_
