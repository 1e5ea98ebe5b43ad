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

#include "ssat/metrics.hpp"

#include <cmath>
#include <string>

#include "ssat/error.hpp"

namespace ssat::metrics
{

namespace
{

void require_equal_lengths(const Trajectory & pred, const Trajectory & truth)
{
  if (pred.size() != truth.size()) {
    fail_invariant(
      "trajectory length mismatch: pred has " + std::to_string(pred.size()) +
      " points, truth has " + std::to_string(truth.size()));
  }
}

}  // namespace

double ade(const Trajectory & pred, const Trajectory & truth)
{
  require_equal_lengths(pred, truth);
  if (pred.size() == 0) {
    fail_invariant("ade: empty trajectories");
  }
  double sum = 0.0;
  for (int i = 0; i < pred.size(); ++i) {
    sum += distance(pred[i], truth[i]);
  }
  return sum / pred.size();
}

DirectionFrame direction_frame(const Waypoint & s_curr, const Waypoint & s_next)
{
  const Waypoint d = s_next - s_curr;
  const double len = norm(d);
  if (len == 0.0) {
    fail_invariant("direction_frame: coincident waypoints (degenerate trajectory)");
  }
  const Waypoint u_lon = (1.0 / len) * d;
  return {u_lon, perp_right(u_lon)};
}

std::vector<DirectionFrame> direction_frames(const Trajectory & truth)
{
  if (truth.size() < 2) {
    fail_invariant("direction_frames: need at least 2 waypoints");
  }
  // Locate the fallback frame for stationary steps.
  std::optional<DirectionFrame> fallback;
  for (int i = 0; i + 1 < truth.size(); ++i) {
    if (!(truth[i + 1] == truth[i])) {
      fallback = direction_frame(truth[i], truth[i + 1]);
      break;
    }
  }
  if (!fallback) {
    fail_invariant("direction_frames: degenerate trajectory (all waypoints coincide)");
  }
  std::vector<DirectionFrame> frames(static_cast<std::size_t>(truth.size()));
  for (int i = 0; i < truth.size(); ++i) {
    const int a = (i + 1 < truth.size()) ? i : truth.size() - 2;
    frames[static_cast<std::size_t>(i)] =
      (truth[a + 1] == truth[a]) ? *fallback : direction_frame(truth[a], truth[a + 1]);
  }
  return frames;
}

std::vector<double> directional_errors_per_frame(
  const Trajectory & pred, const Trajectory & truth, Axis axis)
{
  require_equal_lengths(pred, truth);
  const auto frames = direction_frames(truth);
  std::vector<double> out(static_cast<std::size_t>(pred.size()));
  for (int i = 0; i < pred.size(); ++i) {
    const Waypoint diff = pred[i] - truth[i];
    const auto & f = frames[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] =
      dot(diff, axis == Axis::kLateral ? f.u_lat : f.u_lon);
  }
  return out;
}

double directional_error(const Trajectory & pred, const Trajectory & truth, Axis axis)
{
  const auto per_frame = directional_errors_per_frame(pred, truth, axis);
  double sum = 0.0;
  for (double v : per_frame) {
    sum += v;
  }
  return sum / static_cast<double>(per_frame.size());
}

double intention_error_rate(
  std::span<const LateralIntent> pred, std::span<const LateralIntent> truth)
{
  if (pred.empty() || truth.empty()) {
    fail_invariant("intention_error_rate: empty input");
  }
  if (pred.size() != truth.size()) {
    fail_invariant("intention_error_rate: length mismatch");
  }
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] != truth[i]) {
      ++mismatches;
    }
  }
  return static_cast<double>(mismatches) / static_cast<double>(pred.size());
}

}  // namespace ssat::metrics
