// Copyright 2026 The gneva Authors
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

#include "gneva/synth.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "gneva/distributions.hpp"
#include "gneva/errors.hpp"

namespace gneva {
namespace {

constexpr double kLaneWidth = 3.5;
constexpr double kPositionNoise = 0.05;

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

// Arc-length parameterized reference path.
using Path = std::function<Pose(double)>;

Pose along_line(const Vec2& start, double heading, double s) {
  return {start + s * Vec2(std::cos(heading), std::sin(heading)), heading};
}

// Straight entry up to `junction`, then a quarter arc of radius R turning
// left (sign = +1) or right (sign = -1), then straight again.
Pose turn_path(double junction, double radius, double sign, double s) {
  if (s <= junction) return {{s, 0.0}, 0.0};
  const double arc = s - junction;
  const double quarter = 0.5 * std::numbers::pi * radius;
  if (arc <= quarter) {
    const double angle = arc / radius;
    return {{junction + radius * std::sin(angle),
             sign * radius * (1.0 - std::cos(angle))},
            sign * angle};
  }
  const Vec2 end(junction + radius, sign * radius);
  return along_line(end, sign * 0.5 * std::numbers::pi, arc - quarter);
}

std::vector<Vec2> sample_path(const Path& path, double s0, double s1,
                              double step) {
  std::vector<Vec2> pts;
  const int n = std::max(1, static_cast<int>(std::ceil((s1 - s0) / step)));
  for (int i = 0; i <= n; ++i) {
    pts.push_back(path(s0 + (s1 - s0) * i / n).position);
  }
  return pts;
}

std::vector<Vec2> offset_line(const std::vector<Vec2>& line, double offset) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const Vec2 a = line[i == 0 ? 0 : i - 1];
    const Vec2 b = line[i + 1 < line.size() ? i + 1 : i];
    Vec2 dir = (b - a).normalized();
    out.push_back(line[i] + offset * Vec2(-dir.y(), dir.x()));
  }
  return out;
}

class SceneBuilder {
 public:
  SceneBuilder(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  // Track following `path` with arc length s(t) for steps 1..H+T (or only
  // 1..H when observed_only). Step H sits at arc length s_h.
  AgentTrack track(const std::string& id, const Path& path, double s_h,
                   double speed_past, double speed_future, bool noisy) {
    std::normal_distribution<double> noise(0.0, kPositionNoise);
    AgentTrack a;
    a.id = id;
    for (int t = 1; t <= cfg_.H + cfg_.T; ++t) {
      const double tau = (t - cfg_.H) * cfg_.dt;
      const double speed = tau <= 0.0 ? speed_past : speed_future;
      const Pose p = path(s_h + speed * tau);
      AgentState st;
      st.t = t;
      st.x = p.position.x();
      st.y = p.position.y();
      if (noisy && t <= cfg_.H) {
        st.x += noise(rng_);
        st.y += noise(rng_);
      }
      st.heading = p.heading;
      st.vx = speed * std::cos(p.heading);
      st.vy = speed * std::sin(p.heading);
      a.states.push_back(st);
    }
    return a;
  }

  static void add_polyline(Scenario& s, const std::string& id, MapKind kind,
                           std::vector<Vec2> pts) {
    s.map.push_back({id, kind, std::move(pts)});
  }

 private:
  const SynthConfig& cfg_;
  Rng& rng_;
};

Scenario make_straight(const SynthConfig& cfg, Rng& rng, SceneBuilder& b) {
  std::uniform_real_distribution<double> speed_dist(6.0, 14.0);
  std::normal_distribution<double> change(0.0, 1.5);
  const double v0 = speed_dist(rng);
  const double v1 = std::max(0.5, v0 + change(rng));
  const double past = v0 * cfg.H * cfg.dt + 30.0;
  const double ahead = 20.0 * cfg.T * cfg.dt + 30.0;

  Scenario s;
  const Path ego = [](double s) { return along_line({0.0, 0.0}, 0.0, s); };
  const Path adjacent = [](double s) {
    return along_line({0.0, kLaneWidth}, 0.0, s);
  };
  const auto center = sample_path(ego, -past, ahead, 5.0);
  SceneBuilder::add_polyline(s, "lane_0", MapKind::kLaneCenter, center);
  SceneBuilder::add_polyline(s, "lane_1", MapKind::kLaneCenter,
                             sample_path(adjacent, -past, ahead, 5.0));
  SceneBuilder::add_polyline(s, "boundary_0", MapKind::kLaneBoundary,
                             offset_line(center, -0.5 * kLaneWidth));
  SceneBuilder::add_polyline(s, "boundary_1", MapKind::kLaneBoundary,
                             offset_line(center, 0.5 * kLaneWidth));
  SceneBuilder::add_polyline(s, "boundary_2", MapKind::kLaneBoundary,
                             offset_line(center, 1.5 * kLaneWidth));

  AgentTrack target = b.track("target", ego, 0.0, v0, v1, true);
  std::uniform_real_distribution<double> gap(15.0, 35.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const double lead_speed = std::max(1.0, v0 + jitter(rng));
  AgentTrack lead = b.track("lead", ego, gap(rng), lead_speed, lead_speed, true);
  const double side_speed = std::max(1.0, v0 + 2.0 * jitter(rng));
  std::uniform_real_distribution<double> side_offset(-20.0, 20.0);
  AgentTrack side =
      b.track("side", adjacent, side_offset(rng), side_speed, side_speed, true);
  s.agents = {std::move(target), std::move(lead), std::move(side)};
  return s;
}

Scenario make_turn(const SynthConfig& cfg, Rng& rng, SceneBuilder& b) {
  std::uniform_real_distribution<double> speed_dist(6.0, 10.0);
  std::uniform_real_distribution<double> junction_dist(2.0, 8.0);
  std::uniform_real_distribution<double> radius_dist(15.0, 25.0);
  std::normal_distribution<double> change(0.0, 0.5);
  std::bernoulli_distribution go_left(0.5);
  const double v0 = speed_dist(rng);
  const double v1 = std::max(0.5, v0 + change(rng));
  const double junction = junction_dist(rng);
  const double radius = radius_dist(rng);
  const double sign = go_left(rng) ? 1.0 : -1.0;
  const double past = v0 * cfg.H * cfg.dt + 30.0;
  const double exit_length = junction + 0.5 * std::numbers::pi * radius + 30.0;

  Scenario s;
  const Path left = [=](double s) { return turn_path(junction, radius, 1.0, s); };
  const Path right = [=](double s) {
    return turn_path(junction, radius, -1.0, s);
  };
  const Path entry = [](double s) { return along_line({0.0, 0.0}, 0.0, s); };
  const auto entry_center = sample_path(entry, -past, junction, 5.0);
  SceneBuilder::add_polyline(s, "entry", MapKind::kLaneCenter, entry_center);
  SceneBuilder::add_polyline(s, "entry_left", MapKind::kLaneBoundary,
                             offset_line(entry_center, 0.5 * kLaneWidth));
  SceneBuilder::add_polyline(s, "entry_right", MapKind::kLaneBoundary,
                             offset_line(entry_center, -0.5 * kLaneWidth));
  SceneBuilder::add_polyline(s, "exit_left", MapKind::kLaneCenter,
                             sample_path(left, junction, exit_length, 3.0));
  SceneBuilder::add_polyline(s, "exit_right", MapKind::kLaneCenter,
                             sample_path(right, junction, exit_length, 3.0));
  SceneBuilder::add_polyline(
      s, "stop_line", MapKind::kStopLine,
      {Vec2(junction, -0.5 * kLaneWidth), Vec2(junction, 0.5 * kLaneWidth)});

  const Path chosen = sign > 0 ? left : right;
  AgentTrack target = b.track("target", chosen, 0.0, v0, v1, true);
  std::uniform_real_distribution<double> gap(10.0, 25.0);
  AgentTrack follower =
      b.track("follower", entry, -gap(rng), v0, v0, true);
  s.agents = {std::move(target), std::move(follower)};
  return s;
}

Scenario make_merge(const SynthConfig& cfg, Rng& rng, SceneBuilder& b) {
  std::uniform_real_distribution<double> speed_dist(6.0, 12.0);
  std::uniform_real_distribution<double> angle_dist(0.15, 0.35);
  std::uniform_real_distribution<double> to_merge_dist(5.0, 15.0);
  std::normal_distribution<double> change(0.0, 1.0);
  const double v0 = speed_dist(rng);
  const double v1 = std::max(0.5, v0 + change(rng));
  const double angle = angle_dist(rng);
  const double to_merge = to_merge_dist(rng);
  const double past = v0 * cfg.H * cfg.dt + 30.0;

  // The merge point sits at the origin of the construction frame; the
  // target is on the ramp, `to_merge` meters before it.
  const Vec2 ramp_dir(std::cos(angle), std::sin(angle));
  const Path ramp_then_main = [=](double s) {
    if (s <= to_merge) {
      return Pose{Vec2::Zero() - (to_merge - s) * ramp_dir, angle};
    }
    return along_line({0.0, 0.0}, 0.0, s - to_merge);
  };
  const Path main = [](double s) { return along_line({0.0, 0.0}, 0.0, s); };

  Scenario s;
  const double ahead = 20.0 * cfg.T * cfg.dt + 30.0;
  SceneBuilder::add_polyline(s, "main", MapKind::kLaneCenter,
                             sample_path(main, -past - 20.0, ahead, 5.0));
  SceneBuilder::add_polyline(s, "ramp", MapKind::kLaneCenter,
                             sample_path(ramp_then_main, -past, to_merge, 5.0));
  const auto main_line = sample_path(main, -past - 20.0, ahead, 5.0);
  SceneBuilder::add_polyline(s, "main_left", MapKind::kLaneBoundary,
                             offset_line(main_line, 0.5 * kLaneWidth));

  AgentTrack target = b.track("target", ramp_then_main, 0.0, v0, v1, true);
  std::uniform_real_distribution<double> lead_gap(5.0, 25.0);
  const double lead_speed = std::max(1.0, v0 + change(rng));
  AgentTrack lead = b.track("lead", main, lead_gap(rng), lead_speed,
                            lead_speed, true);
  s.agents = {std::move(target), std::move(lead)};
  return s;
}

}  // namespace

std::string_view to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kStraight: return "straight";
    case SceneKind::kTurn: return "turn";
    case SceneKind::kMerge: return "merge";
  }
  return "straight";
}

SceneKind parse_scene_kind(std::string_view text) {
  if (text == "straight") return SceneKind::kStraight;
  if (text == "turn") return SceneKind::kTurn;
  if (text == "merge") return SceneKind::kMerge;
  throw ValidationError("unknown scene kind '" + std::string(text) + "'");
}

std::vector<Scenario> synth_generate(const SynthConfig& cfg, SceneKind kind) {
  if (cfg.n < 1) throw ValidationError("synth: n must be at least 1");
  if (cfg.H < 2 || cfg.T < 1 || !(cfg.dt > 0.0)) {
    throw ValidationError("synth: need H >= 2, T >= 1 and dt > 0");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(kind)};
  Rng rng(seq);
  SceneBuilder builder(cfg, rng);
  std::uniform_real_distribution<double> angle(-std::numbers::pi,
                                               std::numbers::pi);
  std::uniform_real_distribution<double> shift(-100.0, 100.0);

  std::vector<Scenario> out;
  out.reserve(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    Scenario local;
    switch (kind) {
      case SceneKind::kStraight: local = make_straight(cfg, rng, builder); break;
      case SceneKind::kTurn: local = make_turn(cfg, rng, builder); break;
      case SceneKind::kMerge: local = make_merge(cfg, rng, builder); break;
    }
    char id[96];
    std::snprintf(id, sizeof(id), "%s-s%llu-%05d",
                  std::string(to_string(kind)).c_str(),
                  static_cast<unsigned long long>(cfg.seed), i);
    local.scenario_id = id;
    local.dt = cfg.dt;
    local.H = cfg.H;
    local.T = cfg.T;
    local.target_id = "target";
    // Place the construction frame somewhere in the world.
    const FrameTransform placement{{shift(rng), shift(rng)}, angle(rng)};
    out.push_back(transform_scenario(local, placement, /*to_world=*/true));
  }
  return out;
}

}  // namespace gneva
