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

#ifndef GNEVA_DATAIO_HPP_
#define GNEVA_DATAIO_HPP_

#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "gneva/encoder_config.hpp"
#include "gneva/special_math.hpp"
#include "gneva/tensor.hpp"

namespace gneva {

enum class AgentKind { kVehicle, kPedestrian, kCyclist };
enum class MapKind { kLaneCenter, kLaneBoundary, kCrosswalk, kStopLine };

inline constexpr int kAgentKinds = 3;
inline constexpr int kMapKinds = 4;
// (x_start, y_start, x_end, y_end, one-hot kind)
inline constexpr int kMapVectorWidth = 4 + kMapKinds;
// (x_start, y_start, x_end, y_end, heading, vx, vy, one-hot kind)
inline constexpr int kAgentVectorWidth = 7 + kAgentKinds;

std::string_view to_string(AgentKind kind);
std::string_view to_string(MapKind kind);
AgentKind parse_agent_kind(std::string_view text);
MapKind parse_map_kind(std::string_view text);

struct AgentState {
  int t = 0;  // 1-based step index
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const AgentState&) const = default;
};

struct AgentTrack {
  std::string id;
  AgentKind kind = AgentKind::kVehicle;
  std::vector<AgentState> states;

  const AgentState* state_at(int t) const;
  bool operator==(const AgentTrack&) const = default;
};

struct MapPolyline {
  std::string id;
  MapKind kind = MapKind::kLaneCenter;
  std::vector<Vec2> points;

  bool operator==(const MapPolyline&) const = default;
};

struct Scenario {
  std::string scenario_id;
  double dt = 0.1;
  int H = 10;
  int T = 30;
  std::string target_id;
  std::vector<AgentTrack> agents;
  std::vector<MapPolyline> map;

  const AgentTrack& target() const;
  // Enforces every schema invariant; with require_future the target must
  // also carry states H+1..H+T. Throws ValidationError.
  void validate(bool require_future = false) const;
  bool operator==(const Scenario&) const = default;
};

Scenario scenario_from_json_text(std::string_view text);
std::string scenario_to_json_text(const Scenario& s);
// Throws ParseError (malformed JSON or wrong field types) or
// ValidationError (invariant violations).
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& s, const std::filesystem::path& path);
// Every *.json scenario under dir, sorted by file name.
std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir);

// Rigid transform taking world coordinates into the target-centric frame.
struct FrameTransform {
  Vec2 origin = Vec2::Zero();  // target position at step H, world frame
  double heading = 0.0;        // target heading at step H, world frame

  Vec2 to_local(const Vec2& world) const;
  Vec2 to_world(const Vec2& local) const;
  Vec2 rotate_to_local(const Vec2& v) const;
  Vec2 rotate_to_world(const Vec2& v) const;
  FrameTransform inverse() const;
};

double wrap_angle(double a);

// Throws MissingHorizonState if the target has no state at step H.
FrameTransform target_frame(const Scenario& s);
// Applies the frame's to_local (or, with to_world, its inverse) to every
// position, velocity and heading in the scenario.
Scenario transform_scenario(const Scenario& s, const FrameTransform& frame,
                            bool to_world = false);
Scenario to_target_frame(const Scenario& s);

// Target position at step H+T. Throws MissingHorizonState when absent.
Vec2 goal_of(const Scenario& s);
// Target positions for steps H+1..H+T.
std::vector<Vec2> ground_truth_future(const Scenario& s);

struct VectorizedScene {
  std::vector<Tensor> map_polylines;  // each (vectors x kMapVectorWidth)
  Tensor target;                      // (vectors x kAgentVectorWidth)
  std::vector<Tensor> others;
  std::vector<bool> others_observed_at_horizon;
  std::vector<std::string> other_ids;
};

// Breaks polylines and observed tracks (steps 1..H) into segment vectors.
// Counts above the configured caps are truncated farthest-from-origin first.
VectorizedScene vectorize(const Scenario& s, const EncoderConfig& cfg);

// Keeps map polylines having a segment strictly closer than r to the origin.
Scenario mask_map_by_radius(const Scenario& s,
                            double r = std::numeric_limits<double>::infinity());

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace gneva

#endif  // GNEVA_DATAIO_HPP_
