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

#include "ssat/svg.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <string>

#include "ssat/error.hpp"

namespace ssat
{

namespace
{

struct Bounds
{
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void include(const Waypoint & p)
  {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  void include(const Trajectory & t)
  {
    for (const auto & p : t.points) {
      include(p);
    }
  }
};

void polyline(
  std::ofstream & out, const Trajectory & t, const std::string & color, bool dashed,
  double width)
{
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
      << "\"";
  if (dashed) {
    out << " stroke-dasharray=\"1.2,0.8\"";
  }
  out << " points=\"";
  for (const auto & p : t.points) {
    out << p.x << ',' << -p.y << ' ';  // SVG y grows downward
  }
  out << "\"/>\n";
}

}  // namespace

void write_scene_overlay(
  const std::filesystem::path & path, const Scene & scene, const Trajectory & adv_history,
  const Trajectory & benign_pred, const Trajectory & attacked_pred)
{
  Bounds b;
  const Agent & target = scene.target();
  b.include(target.history);
  b.include(target.future);
  b.include(adv_history);
  b.include(benign_pred);
  b.include(attacked_pred);
  const double pad = 5.0;
  const double w = b.max_x - b.min_x + 2 * pad;
  const double h = b.max_y - b.min_y + 2 * pad;

  std::ofstream out(path);
  if (!out) {
    fail_usage("cannot write plot: " + path.string());
  }
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\""
      << (b.min_x - pad) << ' ' << -(b.max_y + pad) << ' ' << w << ' ' << h << "\">\n";

  for (const auto & lane : scene.map.lanes) {
    Trajectory t;
    t.points = lane.points;
    polyline(out, t, "#cccccc", false, 0.15);
  }
  for (const auto & agent : scene.agents) {
    if (agent.id == scene.target_id) {
      continue;
    }
    polyline(out, agent.history, "#888888", false, 0.25);
  }
  polyline(out, target.history, "#1f77b4", false, 0.35);   // benign history
  polyline(out, adv_history, "#d62728", false, 0.35);      // adversarial history
  polyline(out, target.future, "#2ca02c", true, 0.35);     // ground truth
  polyline(out, benign_pred, "#ff7f0e", true, 0.3);        // benign prediction
  polyline(out, attacked_pred, "#d62728", true, 0.3);      // attacked prediction
  out << "</svg>\n";
}

}  // namespace ssat
