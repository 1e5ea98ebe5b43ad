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

#include "ssat/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ssat/error.hpp"
#include "ssat/metrics.hpp"
#include "ssat/rng.hpp"

namespace ssat::scenario
{

std::string to_string(Template t)
{
  switch (t) {
    case Template::kStraightFollow:
      return "straight-follow";
    case Template::kLaneChangeLeft:
      return "lane-change-left";
    case Template::kLaneChangeRight:
      return "lane-change-right";
    case Template::kTurn:
      return "turn";
    default:
      return "free-flow";
  }
}

std::optional<Template> template_from_string(std::string_view name)
{
  if (name == "straight-follow") return Template::kStraightFollow;
  if (name == "lane-change-left") return Template::kLaneChangeLeft;
  if (name == "lane-change-right") return Template::kLaneChangeRight;
  if (name == "turn") return Template::kTurn;
  if (name == "free-flow") return Template::kFreeFlow;
  return std::nullopt;
}

namespace
{

constexpr double kLaneWidth = 3.5;
constexpr int kTotalFrames = kHistoryLen + kFutureLen;

// Scene-local placement: canonical coordinates (heading +x, anchor at origin)
// rotated by theta and shifted by offset.
struct Placement
{
  double theta = 0.0;
  Waypoint offset;

  Waypoint operator()(double x, double y) const { return offset + rotated({x, y}, theta); }
};

// Canonical longitudinal position at frame time tau (anchor frame is tau = 0).
double longitudinal(double v, double accel, double tau)
{
  return v * tau + 0.5 * accel * tau * tau;
}

double frame_tau(int frame)
{
  return (frame - (kHistoryLen - 1)) * kFrameDt;
}

Agent make_agent_from_canonical(
  int id, const Placement & place, const std::vector<Waypoint> & canonical,
  std::optional<int> lane_id)
{
  Agent agent;
  agent.id = id;
  agent.lane_id = lane_id;
  for (int f = 0; f < kTotalFrames; ++f) {
    const Waypoint p = place(canonical[static_cast<std::size_t>(f)].x,
                             canonical[static_cast<std::size_t>(f)].y);
    if (f < kHistoryLen) {
      agent.history.points.push_back(p);
    } else {
      agent.future.points.push_back(p);
    }
  }
  return agent;
}

std::vector<Waypoint> straight_canonical(
  double v, double accel, double gap, double drift_per_s, Rng & rng, double jitter_sd)
{
  std::vector<Waypoint> pts(kTotalFrames);
  for (int f = 0; f < kTotalFrames; ++f) {
    const double tau = frame_tau(f);
    double x = longitudinal(v, accel, tau) + gap;
    double y = tau > 0.0 ? drift_per_s * tau : 0.0;
    if (f < kHistoryLen && jitter_sd > 0.0) {
      x += normal(rng, 0.0, jitter_sd);
      y += normal(rng, 0.0, jitter_sd);
    }
    pts[static_cast<std::size_t>(f)] = {x, y};
  }
  return pts;
}

LanePolyline straight_lane(
  int id, const Placement & place, double x0, double x1, double y,
  std::optional<int> successor)
{
  LanePolyline lane;
  lane.id = id;
  lane.successor_id = successor;
  const double len = x1 - x0;
  const int n = std::max(2, static_cast<int>(std::ceil(len / 5.0)) + 1);
  for (int i = 0; i < n; ++i) {
    const double x = x0 + len * i / (n - 1);
    lane.points.push_back(place(x, y));
  }
  return lane;
}

}  // namespace

Scene generate_synthetic_scene(std::uint64_t seed, Template tpl, const ScenarioConfig & cfg)
{
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(tpl) + 0x5eed));
  Scene scene;
  scene.scene_id = to_string(tpl) + "#" + std::to_string(seed);
  scene.target_id = 0;

  Placement place;
  place.theta = uniform(rng, 0.0, 2.0 * M_PI);
  place.offset = {uniform(rng, -40.0, 40.0), uniform(rng, -40.0, 40.0)};

  const double v = uniform(rng, 6.0, 14.0);
  const double accel = (tpl == Template::kTurn) ? 0.0 : uniform(rng, -0.4, 0.4);
  const double jitter_sd = 0.03;
  const int base = cfg.lane_id_base;

  switch (tpl) {
    case Template::kStraightFollow: {
      const double drift = uniform(rng, 0.0, 0.04) / 3.0;
      scene.agents.push_back(make_agent_from_canonical(
        0, place, straight_canonical(v, accel, 0.0, drift, rng, jitter_sd), base));
      const double headway = std::clamp(std::exp(normal(rng, 0.0682, 0.647)), 0.4, 4.0);
      const double gap = std::clamp(headway * v, 4.0, 45.0);
      scene.agents.push_back(make_agent_from_canonical(
        1, place, straight_canonical(v, accel, gap, 0.0, rng, jitter_sd), base));
      scene.map.lanes.push_back(straight_lane(base, place, -75.0, 95.0, 0.0, std::nullopt));
      break;
    }
    case Template::kLaneChangeLeft:
    case Template::kLaneChangeRight: {
      const double dir = (tpl == Template::kLaneChangeLeft) ? 1.0 : -1.0;
      std::vector<Waypoint> pts(kTotalFrames);
      for (int f = 0; f < kTotalFrames; ++f) {
        const double tau = frame_tau(f);
        double x = longitudinal(v, accel, tau);
        const double u = std::clamp((tau - 0.2) / 2.2, 0.0, 1.0);
        double y = dir * kLaneWidth * 0.5 * (1.0 - std::cos(M_PI * u));
        if (f < kHistoryLen) {
          x += normal(rng, 0.0, jitter_sd);
          y += normal(rng, 0.0, jitter_sd);
        }
        pts[static_cast<std::size_t>(f)] = {x, y};
      }
      scene.agents.push_back(make_agent_from_canonical(0, place, pts, base));
      // A neighbor in the destination lane, behind or well ahead of the target.
      const bool behind = uniform(rng, 0.0, 1.0) < 0.5;
      const double gap = behind ? uniform(rng, -30.0, -10.0) : uniform(rng, 12.0, 40.0);
      std::vector<Waypoint> nbr(kTotalFrames);
      for (int f = 0; f < kTotalFrames; ++f) {
        const double tau = frame_tau(f);
        double x = longitudinal(v, 0.0, tau) + gap;
        double y = dir * kLaneWidth;
        if (f < kHistoryLen) {
          x += normal(rng, 0.0, jitter_sd);
          y += normal(rng, 0.0, jitter_sd);
        }
        nbr[static_cast<std::size_t>(f)] = {x, y};
      }
      scene.agents.push_back(make_agent_from_canonical(1, place, nbr, base + 1));
      scene.map.lanes.push_back(straight_lane(base, place, -75.0, 95.0, 0.0, std::nullopt));
      scene.map.lanes.push_back(
        straight_lane(base + 1, place, -75.0, 95.0, dir * kLaneWidth, std::nullopt));
      break;
    }
    case Template::kTurn: {
      const double dir = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0;
      const double radius = uniform(rng, 12.0, 25.0);
      const double tau_s = 0.3;
      const double x_s = v * tau_s;
      std::vector<Waypoint> pts(kTotalFrames);
      for (int f = 0; f < kTotalFrames; ++f) {
        const double tau = frame_tau(f);
        double x;
        double y;
        if (tau <= tau_s) {
          x = v * tau;
          y = 0.0;
        } else {
          const double phi = v * (tau - tau_s) / radius;
          x = x_s + radius * std::sin(phi);
          y = dir * radius * (1.0 - std::cos(phi));
        }
        if (f < kHistoryLen) {
          x += normal(rng, 0.0, jitter_sd);
          y += normal(rng, 0.0, jitter_sd);
        }
        pts[static_cast<std::size_t>(f)] = {x, y};
      }
      scene.agents.push_back(make_agent_from_canonical(0, place, pts, base));

      // Entry lane, turning arc, and a short exit straight chained by successors.
      scene.map.lanes.push_back(straight_lane(base, place, -75.0, x_s, 0.0, base + 1));
      LanePolyline arc;
      arc.id = base + 1;
      arc.successor_id = base + 2;
      const double phi_max = std::min(M_PI / 2.0, v * (3.0 - tau_s) / radius + 0.3);
      const int arc_pts = std::max(2, static_cast<int>(std::ceil(radius * phi_max / 4.0)) + 1);
      for (int i = 0; i < arc_pts; ++i) {
        const double phi = phi_max * i / (arc_pts - 1);
        arc.points.push_back(
          place(x_s + radius * std::sin(phi), dir * radius * (1.0 - std::cos(phi))));
      }
      scene.map.lanes.push_back(arc);
      LanePolyline exit_lane;
      exit_lane.id = base + 2;
      const Waypoint exit_dir{std::cos(phi_max), dir * std::sin(phi_max)};
      const Waypoint arc_end{x_s + radius * std::sin(phi_max),
                             dir * radius * (1.0 - std::cos(phi_max))};
      for (int i = 0; i < 6; ++i) {
        exit_lane.points.push_back(
          place(arc_end.x + exit_dir.x * 5.0 * i, arc_end.y + exit_dir.y * 5.0 * i));
      }
      scene.map.lanes.push_back(exit_lane);

      if (uniform(rng, 0.0, 1.0) < 0.4) {
        const double gap = uniform(rng, -30.0, -12.0);
        scene.agents.push_back(make_agent_from_canonical(
          1, place, straight_canonical(v, 0.0, gap, 0.0, rng, jitter_sd), base));
      }
      break;
    }
    case Template::kFreeFlow: {
      const double dir = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0;
      const double drift = dir * uniform(rng, 0.0, 0.22) / 3.0;
      scene.agents.push_back(make_agent_from_canonical(
        0, place, straight_canonical(v, accel, 0.0, drift, rng, jitter_sd), base));
      scene.map.lanes.push_back(straight_lane(base, place, -75.0, 95.0, 0.0, std::nullopt));
      if (uniform(rng, 0.0, 1.0) < 0.5) {
        const double side = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : -1.0;
        const double gap = uniform(rng, -20.0, 40.0);
        const double v_n = uniform(rng, 6.0, 14.0);
        std::vector<Waypoint> nbr(kTotalFrames);
        for (int f = 0; f < kTotalFrames; ++f) {
          const double tau = frame_tau(f);
          double x = v_n * tau + gap;
          double y = side * kLaneWidth;
          if (f < kHistoryLen) {
            x += normal(rng, 0.0, jitter_sd);
            y += normal(rng, 0.0, jitter_sd);
          }
          nbr[static_cast<std::size_t>(f)] = {x, y};
        }
        scene.agents.push_back(make_agent_from_canonical(1, place, nbr, base + 1));
        scene.map.lanes.push_back(
          straight_lane(base + 1, place, -75.0, 95.0, side * kLaneWidth, std::nullopt));
      }
      break;
    }
  }

  validate_scene(scene, cfg.v_max);
  return scene;
}

Scene generate_synthetic_scene(
  std::uint64_t seed, std::string_view template_id, const ScenarioConfig & cfg)
{
  const auto tpl = template_from_string(template_id);
  if (!tpl) {
    fail_usage("unknown scenario template: " + std::string(template_id));
  }
  return generate_synthetic_scene(seed, *tpl, cfg);
}

namespace
{

struct LaneProjection
{
  double s = 0.0;         // arclength along the chain
  double distance = 0.0;  // unsigned distance from the centerline
};

// Chain of lane polylines linked by successor ids, starting from `first`.
std::vector<const LanePolyline *> lane_chain(const MapContext & map, int first)
{
  std::vector<const LanePolyline *> chain;
  const LanePolyline * lane = map.find_lane(first);
  std::set<int> seen;
  while (lane != nullptr && seen.insert(lane->id).second && chain.size() < 8) {
    chain.push_back(lane);
    lane = lane->successor_id ? map.find_lane(*lane->successor_id) : nullptr;
  }
  return chain;
}

std::optional<LaneProjection> project_onto_chain(
  const std::vector<const LanePolyline *> & chain, const Waypoint & p)
{
  std::optional<LaneProjection> best;
  double chain_offset = 0.0;
  for (const auto * lane : chain) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < lane->points.size(); ++i) {
      const Waypoint a = lane->points[i];
      const Waypoint b = lane->points[i + 1];
      const Waypoint ab = b - a;
      const double len2 = dot(ab, ab);
      const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
      const Waypoint q = a + t * ab;
      const double d = distance(p, q);
      const double s = chain_offset + acc + t * std::sqrt(len2);
      if (!best || d < best->distance) {
        best = LaneProjection{s, d};
      }
      acc += std::sqrt(len2);
    }
    chain_offset += acc;
  }
  return best;
}

int nearest_lane_id(const MapContext & map, const Waypoint & p)
{
  int best_id = -1;
  double best_d = 0.0;
  for (const auto & lane : map.lanes) {
    const auto proj = project_onto_chain({&lane}, p);
    if (proj && (best_id < 0 || proj->distance < best_d)) {
      best_id = lane.id;
      best_d = proj->distance;
    }
  }
  return best_id;
}

}  // namespace

std::optional<double> compute_time_headway(const Scene & scene, const ScenarioConfig & cfg)
{
  const Agent & target = scene.target();
  const Waypoint anchor = target.history[kHistoryLen - 1];
  const double speed =
    distance(anchor, target.history[kHistoryLen - 2]) / kFrameDt;
  if (speed < cfg.min_speed_mps) {
    return std::nullopt;
  }
  int lane_id = target.lane_id.value_or(-1);
  if (lane_id < 0) {
    if (scene.map.lanes.empty()) {
      return std::nullopt;
    }
    lane_id = nearest_lane_id(scene.map, anchor);
  }
  const auto chain = lane_chain(scene.map, lane_id);
  if (chain.empty()) {
    return std::nullopt;
  }
  const auto target_proj = project_onto_chain(chain, anchor);
  if (!target_proj) {
    return std::nullopt;
  }
  std::optional<double> min_gap;
  for (const auto & agent : scene.agents) {
    if (agent.id == scene.target_id) {
      continue;
    }
    const Waypoint p = agent.history[kHistoryLen - 1];
    const auto proj = project_onto_chain(chain, p);
    if (!proj || proj->distance > cfg.lane_half_width_m) {
      continue;
    }
    const double gap = proj->s - target_proj->s;
    if (gap <= 0.5 || gap > cfg.sensing_range_m) {
      continue;
    }
    if (!min_gap || gap < *min_gap) {
      min_gap = gap;
    }
  }
  if (!min_gap) {
    return std::nullopt;
  }
  return *min_gap / speed;
}

std::optional<LateralIntent> label_lateral_intention(
  const Scene & scene, const ScenarioConfig & cfg)
{
  const Trajectory & future = scene.target().future;
  if (future.size() != kFutureLen) {
    fail_invariant("label_lateral_intention: future must have " +
                   std::to_string(kFutureLen) + " points");
  }
  // Lateral axis of the initial heading, first non-degenerate step.
  std::optional<Waypoint> u_lat;
  for (int i = 0; i + 1 < future.size(); ++i) {
    if (!(future[i + 1] == future[i])) {
      u_lat = metrics::direction_frame(future[i], future[i + 1]).u_lat;
      break;
    }
  }
  if (!u_lat) {
    return std::nullopt;  // stationary future carries no clear intention
  }
  std::vector<double> d(static_cast<std::size_t>(future.size()));
  for (int i = 0; i < future.size(); ++i) {
    d[static_cast<std::size_t>(i)] = dot(future[i] - future[0], *u_lat);
  }
  const double net = d.back();
  const int hold_frames =
    std::max(1, static_cast<int>(std::lround(cfg.hold_time_s / kFrameDt)));
  if (std::abs(net) >= cfg.d_min_m) {
    const double sgn = net > 0.0 ? 1.0 : -1.0;
    bool sustained = true;
    for (int i = future.size() - hold_frames; i < future.size(); ++i) {
      if (sgn * d[static_cast<std::size_t>(i)] < cfg.d_min_m) {
        sustained = false;
        break;
      }
    }
    if (sustained) {
      return net > 0.0 ? LateralIntent::kRight : LateralIntent::kLeft;
    }
  }
  if (std::abs(net) <= cfg.d_fwd_m) {
    return LateralIntent::kForward;
  }
  return std::nullopt;
}

SemanticLabels semantic_labels(const Scene & scene, const ScenarioConfig & cfg)
{
  return {compute_time_headway(scene, cfg), label_lateral_intention(scene, cfg)};
}

// ---------------------------------------------------------------------------
// Flat-file ingestion / export
// ---------------------------------------------------------------------------

namespace
{

std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string & line)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string & s, double & out)
{
  if (s.empty()) return false;
  char * end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool parse_int(const std::string & s, long & out)
{
  if (s.empty()) return false;
  char * end = nullptr;
  out = std::strtol(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

struct RawAgent
{
  int id = 0;
  int first_line = 0;
  bool is_target = false;
  std::optional<int> lane_id;
  std::vector<bool> seen = std::vector<bool>(kTotalFrames, false);
  std::vector<Waypoint> points = std::vector<Waypoint>(kTotalFrames);
};

struct RawScene
{
  std::string id;
  int first_line = 0;
  std::vector<RawAgent> agents;  // in first-appearance order

  RawAgent & agent(int id, int line)
  {
    for (auto & a : agents) {
      if (a.id == id) return a;
    }
    agents.push_back(RawAgent{});
    agents.back().id = id;
    agents.back().first_line = line;
    return agents.back();
  }
};

}  // namespace

std::filesystem::path map_path_for(const std::filesystem::path & scenes_path)
{
  std::filesystem::path p = scenes_path;
  p.replace_extension();
  p += ".map.csv";
  return p;
}

std::vector<Scene> ingest_scenes(
  const std::filesystem::path & path, std::vector<IngestIssue> & issues)
{
  std::ifstream in(path);
  if (!in) {
    fail_usage("cannot open scenes file: " + path.string());
  }

  // Lane pool from the sibling map file (may be absent for map-free data).
  std::map<int, LanePolyline> lane_pool;
  {
    std::ifstream map_in(map_path_for(path));
    if (map_in) {
      std::string line;
      int line_no = 0;
      std::map<int, std::map<int, Waypoint>> lane_points;
      while (std::getline(map_in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) continue;  // header
        const auto cols = split_csv(line);
        long lane_id = 0;
        long point_index = 0;
        double x = 0.0;
        double y = 0.0;
        if (
          cols.size() < 4 || !parse_int(cols[0], lane_id) || !parse_int(cols[1], point_index) ||
          !parse_double(cols[2], x) || !parse_double(cols[3], y)) {
          issues.push_back({"", line_no, "malformed map row in " + map_path_for(path).string()});
          continue;
        }
        auto & lane = lane_pool[static_cast<int>(lane_id)];
        lane.id = static_cast<int>(lane_id);
        lane_points[lane.id][static_cast<int>(point_index)] = {x, y};
        if (cols.size() >= 5 && !cols[4].empty()) {
          long succ = 0;
          if (parse_int(cols[4], succ)) {
            lane.successor_id = static_cast<int>(succ);
          }
        }
      }
      for (auto & [id, pts] : lane_points) {
        auto & lane = lane_pool[id];
        for (auto & [idx, p] : pts) {
          lane.points.push_back(p);
        }
      }
    }
  }

  std::vector<RawScene> raw;
  auto find_scene = [&raw](const std::string & id, int line) -> RawScene & {
    for (auto & s : raw) {
      if (s.id == id) return s;
    }
    raw.push_back(RawScene{id, line, {}});
    return raw.back();
  };

  std::string line;
  int line_no = 0;
  std::set<std::string> broken;  // scene ids with row-level damage
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      continue;  // header row
    }
    const auto cols = split_csv(line);
    long agent_id = 0;
    long is_target = 0;
    long frame = 0;
    double x = 0.0;
    double y = 0.0;
    if (
      cols.size() < 7 || cols[0].empty() || !parse_int(cols[1], agent_id) ||
      !parse_int(cols[2], is_target) || !parse_int(cols[3], frame) ||
      !parse_double(cols[4], x) || !parse_double(cols[5], y)) {
      issues.push_back({cols.empty() ? "" : cols[0], line_no, "malformed row"});
      if (!cols.empty()) broken.insert(cols[0]);
      continue;
    }
    RawScene & scene = find_scene(cols[0], line_no);
    if (frame < 0 || frame >= kTotalFrames) {
      issues.push_back(
        {scene.id, line_no,
         "frame index " + std::to_string(frame) + " outside 0.." +
           std::to_string(kTotalFrames - 1)});
      broken.insert(scene.id);
      continue;
    }
    RawAgent & agent = scene.agent(static_cast<int>(agent_id), line_no);
    if (agent.seen[static_cast<std::size_t>(frame)]) {
      issues.push_back(
        {scene.id, line_no,
         "duplicate frame " + std::to_string(frame) + " for agent " +
           std::to_string(agent.id)});
      broken.insert(scene.id);
      continue;
    }
    agent.seen[static_cast<std::size_t>(frame)] = true;
    agent.points[static_cast<std::size_t>(frame)] = {x, y};
    if (is_target != 0) {
      agent.is_target = true;
    }
    if (!cols[6].empty()) {
      long lane = 0;
      if (parse_int(cols[6], lane)) {
        agent.lane_id = static_cast<int>(lane);
      }
    }
  }

  std::vector<Scene> scenes;
  for (auto & rs : raw) {
    if (broken.count(rs.id)) {
      continue;
    }
    bool ok = true;
    Scene scene;
    scene.scene_id = rs.id;
    int target_count = 0;
    for (auto & ra : rs.agents) {
      int frames_seen = 0;
      for (bool b : ra.seen) {
        frames_seen += b ? 1 : 0;
      }
      if (frames_seen != kTotalFrames) {
        issues.push_back(
          {rs.id, ra.first_line,
           "agent " + std::to_string(ra.id) + " has " + std::to_string(frames_seen) +
             " frames, expected " + std::to_string(kTotalFrames)});
        ok = false;
        break;
      }
      Agent agent;
      agent.id = ra.id;
      agent.lane_id = ra.lane_id;
      for (int f = 0; f < kTotalFrames; ++f) {
        if (f < kHistoryLen) {
          agent.history.points.push_back(ra.points[static_cast<std::size_t>(f)]);
        } else {
          agent.future.points.push_back(ra.points[static_cast<std::size_t>(f)]);
        }
      }
      if (ra.is_target) {
        scene.target_id = ra.id;
        ++target_count;
      }
      scene.agents.push_back(std::move(agent));
    }
    if (!ok) {
      continue;
    }
    if (target_count != 1) {
      issues.push_back(
        {rs.id, rs.first_line,
         "scene has " + std::to_string(target_count) + " target agents, expected 1"});
      continue;
    }
    // Rebuild the per-scene map: lanes referenced by agents plus successors.
    std::set<int> wanted;
    for (const auto & a : scene.agents) {
      if (!a.lane_id) continue;
      int id = *a.lane_id;
      int hops = 0;
      while (wanted.insert(id).second && hops++ < 8) {
        auto it = lane_pool.find(id);
        if (it == lane_pool.end()) {
          issues.push_back(
            {rs.id, rs.first_line, "lane " + std::to_string(id) + " missing from map file"});
          ok = false;
          break;
        }
        if (!it->second.successor_id) break;
        id = *it->second.successor_id;
      }
      if (!ok) break;
    }
    if (!ok) {
      continue;
    }
    for (int id : wanted) {
      scene.map.lanes.push_back(lane_pool.at(id));
    }
    try {
      validate_scene(scene);
    } catch (const Error & e) {
      issues.push_back({rs.id, rs.first_line, e.what()});
      continue;
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<Scene> ingest_scenes(const std::filesystem::path & path)
{
  std::vector<IngestIssue> issues;
  auto scenes = ingest_scenes(path, issues);
  if (!issues.empty()) {
    const auto & first = issues.front();
    fail_usage(
      path.string() + ":" + std::to_string(first.line) +
      (first.scene_id.empty() ? "" : " scene " + first.scene_id) + ": " + first.message +
      (issues.size() > 1 ? " (+" + std::to_string(issues.size() - 1) + " more issues)" : ""));
  }
  return scenes;
}

void export_scenes(const std::filesystem::path & path, std::span<const Scene> scenes)
{
  // Lane ids must be unique per file and reachable from agent references.
  std::set<int> all_lane_ids;
  for (const auto & scene : scenes) {
    if (scene.scene_id.find_first_of(",\n\r") != std::string::npos) {
      fail_usage("scene id contains a delimiter: " + scene.scene_id);
    }
    std::set<int> reachable;
    for (const auto & agent : scene.agents) {
      if (!agent.lane_id) continue;
      int id = *agent.lane_id;
      int hops = 0;
      while (reachable.insert(id).second && hops++ < 8) {
        const auto * lane = scene.map.find_lane(id);
        if (lane == nullptr || !lane->successor_id) break;
        id = *lane->successor_id;
      }
    }
    for (const auto & lane : scene.map.lanes) {
      if (!all_lane_ids.insert(lane.id).second) {
        fail_usage(
          "lane id " + std::to_string(lane.id) + " appears in more than one scene (scene " +
          scene.scene_id + ")");
      }
      if (!reachable.count(lane.id)) {
        fail_usage(
          "scene " + scene.scene_id + ": lane " + std::to_string(lane.id) +
          " is not reachable from any agent lane reference and would not survive ingest");
      }
    }
  }

  std::ofstream out(path);
  if (!out) {
    fail_usage("cannot write scenes file: " + path.string());
  }
  out << "scene_id,agent_id,is_target,frame,x,y,lane_id\n";
  for (const auto & scene : scenes) {
    for (const auto & agent : scene.agents) {
      const std::string lane =
        agent.lane_id ? std::to_string(*agent.lane_id) : std::string();
      for (int f = 0; f < kTotalFrames; ++f) {
        const Waypoint & p =
          f < kHistoryLen ? agent.history[f] : agent.future[f - kHistoryLen];
        out << scene.scene_id << ',' << agent.id << ','
            << (agent.id == scene.target_id ? 1 : 0) << ',' << f << ','
            << format_double(p.x) << ',' << format_double(p.y) << ',' << lane << '\n';
      }
    }
  }
  if (!out) {
    fail_usage("failed while writing scenes file: " + path.string());
  }

  std::ofstream map_out(map_path_for(path));
  if (!map_out) {
    fail_usage("cannot write map file: " + map_path_for(path).string());
  }
  map_out << "lane_id,point_index,x,y,successor_lane_id\n";
  for (const auto & scene : scenes) {
    for (const auto & lane : scene.map.lanes) {
      for (std::size_t i = 0; i < lane.points.size(); ++i) {
        map_out << lane.id << ',' << i << ',' << format_double(lane.points[i].x) << ','
                << format_double(lane.points[i].y) << ',';
        if (i == 0 && lane.successor_id) {
          map_out << *lane.successor_id;
        }
        map_out << '\n';
      }
    }
  }
  if (!map_out) {
    fail_usage("failed while writing map file: " + map_path_for(path).string());
  }
}

}  // namespace ssat::scenario
