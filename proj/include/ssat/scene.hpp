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

#ifndef SSAT_SCENE_HPP_
#define SSAT_SCENE_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssat/geometry.hpp"

namespace ssat
{

// Trajectories are sampled at 10 Hz: 20 history points (2 s) and 30 future points (3 s).
inline constexpr int kHistoryLen = 20;
inline constexpr int kFutureLen = 30;
inline constexpr double kFrameDt = 0.1;
inline constexpr double kDefaultVmax = 40.0;  // m/s, bounds per-frame displacement

struct Trajectory
{
  std::vector<Waypoint> points;

  int size() const { return static_cast<int>(points.size()); }
  const Waypoint & operator[](int i) const { return points[static_cast<std::size_t>(i)]; }
  Waypoint & operator[](int i) { return points[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Trajectory &, const Trajectory &) = default;
};

struct Agent
{
  int id = 0;
  Trajectory history;
  Trajectory future;
  std::optional<int> lane_id;

  friend bool operator==(const Agent &, const Agent &) = default;
};

// Lane centerline polyline with an optional longitudinal successor.
struct LanePolyline
{
  int id = 0;
  std::vector<Waypoint> points;
  std::optional<int> successor_id;

  friend bool operator==(const LanePolyline &, const LanePolyline &) = default;
};

struct MapContext
{
  std::vector<LanePolyline> lanes;

  const LanePolyline * find_lane(int id) const;

  friend bool operator==(const MapContext &, const MapContext &) = default;
};

struct Scene
{
  std::string scene_id;
  std::vector<Agent> agents;
  int target_id = 0;
  MapContext map;

  const Agent & target() const;
  Agent & target();

  friend bool operator==(const Scene &, const Scene &) = default;
};

enum class LateralIntent { kForward = 0, kLeft = 1, kRight = 2 };

std::string to_string(LateralIntent intent);
std::optional<LateralIntent> intent_from_string(std::string_view name);

// Ground-truth semantic labels; absence means the scene carries no such label.
struct SemanticLabels
{
  std::optional<double> headway_s;               // > 0 when present
  std::optional<LateralIntent> lateral_intent;

  friend bool operator==(const SemanticLabels &, const SemanticLabels &) = default;
};

// Throws Error(kInvariant) describing the first violated scene invariant.
void validate_scene(const Scene & scene, double v_max = kDefaultVmax);

// Copy of `scene` with the target agent's history replaced; everything else untouched.
Scene with_target_history(const Scene & scene, const Trajectory & history);

// Flat [x0,y0,x1,y1,...] views used by the differentiable pipeline.
std::vector<double> to_flat(const Trajectory & t);
Trajectory trajectory_from_flat(std::span<const double> flat);

}  // namespace ssat

#endif  // SSAT_SCENE_HPP_
