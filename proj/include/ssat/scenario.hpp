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

#ifndef SSAT_SCENARIO_HPP_
#define SSAT_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssat/scene.hpp"

namespace ssat::scenario
{

struct ScenarioConfig
{
  double v_max = kDefaultVmax;
  double sensing_range_m = 50.0;   // front-vehicle search horizon
  double min_speed_mps = 0.5;      // below this, headway is degenerate
  double d_min_m = 1.0;            // lateral displacement for a left/right label
  double d_fwd_m = 0.3;            // lateral band for a forward label
  double hold_time_s = 1.0;        // how long the displacement must persist
  double lane_half_width_m = 1.75;
  // Lane ids of a generated scene start here; callers producing multi-scene
  // files give each scene a disjoint block so ids stay unique per file.
  int lane_id_base = 1;
};

enum class Template {
  kStraightFollow,
  kLaneChangeLeft,
  kLaneChangeRight,
  kTurn,
  kFreeFlow,
};

inline constexpr int kTemplateCount = 5;

std::string to_string(Template t);
std::optional<Template> template_from_string(std::string_view name);

// Deterministic per (seed, template, config): repeated calls are bit-identical.
Scene generate_synthetic_scene(
  std::uint64_t seed, Template tpl, const ScenarioConfig & cfg = {});

// Named-template overload; throws Error(kUsage) for an unknown template id.
Scene generate_synthetic_scene(
  std::uint64_t seed, std::string_view template_id, const ScenarioConfig & cfg = {});

// Longitudinal gap to the front agent in the target's lane divided by the
// target's speed at the last history frame. Absent when there is no front
// agent within sensing range or the target is quasi-stationary.
std::optional<double> compute_time_headway(const Scene & scene, const ScenarioConfig & cfg = {});

// Maneuver class from the ground-truth future, projected on the lateral axis
// of the initial heading (right-positive). Ambiguous maneuvers stay unlabeled.
std::optional<LateralIntent> label_lateral_intention(
  const Scene & scene, const ScenarioConfig & cfg = {});

SemanticLabels semantic_labels(const Scene & scene, const ScenarioConfig & cfg = {});

struct IngestIssue
{
  std::string scene_id;
  int line = 0;  // 1-based line in the scenes file; 0 when not line-specific
  std::string message;
};

// Reads the flat scene format plus its sibling map file ("x.csv" ->
// "x.map.csv"). The strict overload throws Error(kUsage) on the first issue;
// the lenient overload skips bad scenes and reports them.
std::vector<Scene> ingest_scenes(const std::filesystem::path & path);
std::vector<Scene> ingest_scenes(
  const std::filesystem::path & path, std::vector<IngestIssue> & issues);

// Writes scenes and the sibling map file. Lane ids must be unique across the
// file and every lane reachable from some agent's lane reference through
// successor links, so ingest can rebuild identical scenes.
void export_scenes(const std::filesystem::path & path, std::span<const Scene> scenes);

std::filesystem::path map_path_for(const std::filesystem::path & scenes_path);

}  // namespace ssat::scenario

#endif  // SSAT_SCENARIO_HPP_
