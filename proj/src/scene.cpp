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

#include "ssat/scene.hpp"

#include <cmath>
#include <set>
#include <string>

#include "ssat/error.hpp"

namespace ssat
{

const LanePolyline * MapContext::find_lane(int id) const
{
  for (const auto & lane : lanes) {
    if (lane.id == id) {
      return &lane;
    }
  }
  return nullptr;
}

const Agent & Scene::target() const
{
  for (const auto & agent : agents) {
    if (agent.id == target_id) {
      return agent;
    }
  }
  fail_invariant("scene " + scene_id + ": target agent " + std::to_string(target_id) +
                 " not found");
}

Agent & Scene::target()
{
  return const_cast<Agent &>(static_cast<const Scene *>(this)->target());
}

std::string to_string(LateralIntent intent)
{
  switch (intent) {
    case LateralIntent::kForward:
      return "forward";
    case LateralIntent::kLeft:
      return "left";
    default:
      return "right";
  }
}

std::optional<LateralIntent> intent_from_string(std::string_view name)
{
  if (name == "forward") return LateralIntent::kForward;
  if (name == "left") return LateralIntent::kLeft;
  if (name == "right") return LateralIntent::kRight;
  return std::nullopt;
}

namespace
{

void validate_trajectory(
  const std::string & where, const Trajectory & traj, int expected_len, double v_max)
{
  if (traj.size() != expected_len) {
    fail_invariant(
      where + ": expected " + std::to_string(expected_len) + " points, got " +
      std::to_string(traj.size()));
  }
  const double max_step = v_max * kFrameDt;
  for (int i = 0; i < traj.size(); ++i) {
    if (!std::isfinite(traj[i].x) || !std::isfinite(traj[i].y)) {
      fail_invariant(where + ": non-finite coordinate at frame " + std::to_string(i));
    }
    if (i > 0 && distance(traj[i], traj[i - 1]) > max_step) {
      fail_invariant(
        where + ": displacement between frames " + std::to_string(i - 1) + " and " +
        std::to_string(i) + " exceeds v_max * dt");
    }
  }
}

}  // namespace

void validate_scene(const Scene & scene, double v_max)
{
  if (scene.agents.empty()) {
    fail_invariant("scene " + scene.scene_id + ": no agents");
  }
  std::set<int> ids;
  int target_count = 0;
  for (const auto & agent : scene.agents) {
    if (!ids.insert(agent.id).second) {
      fail_invariant(
        "scene " + scene.scene_id + ": duplicate agent id " + std::to_string(agent.id));
    }
    if (agent.id == scene.target_id) {
      ++target_count;
    }
    const std::string where =
      "scene " + scene.scene_id + ", agent " + std::to_string(agent.id);
    validate_trajectory(where + " history", agent.history, kHistoryLen, v_max);
    validate_trajectory(where + " future", agent.future, kFutureLen, v_max);
  }
  if (target_count != 1) {
    fail_invariant(
      "scene " + scene.scene_id + ": target id " + std::to_string(scene.target_id) +
      " matches " + std::to_string(target_count) + " agents");
  }
  for (const auto & lane : scene.map.lanes) {
    if (lane.points.size() < 2) {
      fail_invariant(
        "scene " + scene.scene_id + ": lane " + std::to_string(lane.id) +
        " has fewer than 2 points");
    }
    for (std::size_t i = 1; i < lane.points.size(); ++i) {
      if (distance(lane.points[i], lane.points[i - 1]) <= 0.0) {
        fail_invariant(
          "scene " + scene.scene_id + ": lane " + std::to_string(lane.id) +
          " has a zero-length segment");
      }
    }
  }
}

Scene with_target_history(const Scene & scene, const Trajectory & history)
{
  Scene out = scene;
  out.target().history = history;
  return out;
}

std::vector<double> to_flat(const Trajectory & t)
{
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(t.size()) * 2);
  for (const auto & p : t.points) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  return flat;
}

Trajectory trajectory_from_flat(std::span<const double> flat)
{
  Trajectory t;
  t.points.reserve(flat.size() / 2);
  for (std::size_t i = 0; i + 1 < flat.size(); i += 2) {
    t.points.push_back({flat[i], flat[i + 1]});
  }
  return t;
}

}  // namespace ssat
