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

#ifndef SSAT_METRICS_HPP_
#define SSAT_METRICS_HPP_

#include <optional>
#include <span>
#include <vector>

#include "ssat/scene.hpp"

namespace ssat::metrics
{

// Orthonormal frame along the ground-truth motion. u_lat points to the
// driver's right (u_lon rotated by -90 degrees), so rightward deviations
// score positive.
struct DirectionFrame
{
  Waypoint u_lon;
  Waypoint u_lat;
};

struct ErrorReport
{
  double ade = 0.0;
  double lat_err = 0.0;  // signed, right-positive
  double lon_err = 0.0;  // signed, forward-positive
  std::optional<bool> intent_correct;
};

enum class Axis { kLateral, kLongitudinal };

// Mean Euclidean distance between corresponding waypoints.
double ade(const Trajectory & pred, const Trajectory & truth);

// Frame from one ground-truth step; throws Error(kInvariant) on coincident points.
DirectionFrame direction_frame(const Waypoint & s_curr, const Waypoint & s_next);

// Per-frame frames for a full ground-truth future. Frame i uses the step
// (truth[i], truth[i+1]); the last frame reuses the final pair. Coincident
// pairs fall back to the first non-degenerate pair; a fully stationary
// trajectory is a degenerate-trajectory error.
std::vector<DirectionFrame> direction_frames(const Trajectory & truth);

// Signed projections of (pred - truth) onto the per-frame axis, one per frame.
std::vector<double> directional_errors_per_frame(
  const Trajectory & pred, const Trajectory & truth, Axis axis);

// Mean of the per-frame projections.
double directional_error(const Trajectory & pred, const Trajectory & truth, Axis axis);

// Fraction of mismatched categories; throws on empty or mismatched input.
double intention_error_rate(
  std::span<const LateralIntent> pred, std::span<const LateralIntent> truth);

}  // namespace ssat::metrics

#endif  // SSAT_METRICS_HPP_
