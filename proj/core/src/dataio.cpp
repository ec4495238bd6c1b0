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

#include "gneva/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gneva/errors.hpp"

namespace gneva {
namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

// Typed field access with the JSON path in every error message.
class Reader {
 public:
  Reader(const json& node, std::string path)
      : node_(node), path_(std::move(path)) {}

  const json& field(const char* name) const {
    if (!node_.is_object()) fail(path_, "expected an object");
    auto it = node_.find(name);
    if (it == node_.end()) fail(child(name), "missing field");
    return *it;
  }

  double number(const char* name) const {
    const json& v = field(name);
    if (!v.is_number()) fail(child(name), "expected a number");
    return v.get<double>();
  }

  int integer(const char* name) const {
    const json& v = field(name);
    if (!v.is_number_integer()) fail(child(name), "expected an integer");
    return v.get<int>();
  }

  std::string string(const char* name) const {
    const json& v = field(name);
    if (!v.is_string()) fail(child(name), "expected a string");
    return v.get<std::string>();
  }

  const json& array(const char* name) const {
    const json& v = field(name);
    if (!v.is_array()) fail(child(name), "expected an array");
    return v;
  }

  std::string child(const std::string& name) const {
    return path_.empty() ? name : path_ + "." + name;
  }

  [[noreturn]] static void fail(const std::string& path,
                                const std::string& what) {
    throw ParseError("field '" + path + "': " + what);
  }

 private:
  const json& node_;
  std::string path_;
};

std::string indexed(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

AgentTrack parse_agent(const json& node, const std::string& path) {
  Reader r(node, path);
  AgentTrack a;
  a.id = r.string("id");
  try {
    a.kind = parse_agent_kind(r.string("kind"));
  } catch (const ValidationError& e) {
    Reader::fail(r.child("kind"), e.what());
  }
  const json& states = r.array("states");
  for (std::size_t i = 0; i < states.size(); ++i) {
    Reader s(states[i], indexed(r.child("states"), i));
    a.states.push_back({s.integer("t"), s.number("x"), s.number("y"),
                        s.number("heading"), s.number("vx"), s.number("vy")});
  }
  return a;
}

MapPolyline parse_polyline(const json& node, const std::string& path) {
  Reader r(node, path);
  MapPolyline p;
  p.id = r.string("id");
  try {
    p.kind = parse_map_kind(r.string("kind"));
  } catch (const ValidationError& e) {
    Reader::fail(r.child("kind"), e.what());
  }
  const json& points = r.array("points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const json& pt = points[i];
    if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() ||
        !pt[1].is_number()) {
      Reader::fail(indexed(r.child("points"), i), "expected [x, y]");
    }
    p.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
  }
  return p;
}

bool finite(double v) { return std::isfinite(v); }

void check(bool ok, const std::string& scenario, const std::string& what) {
  if (!ok) throw ValidationError("scenario '" + scenario + "': " + what);
}

double polyline_distance(const MapPolyline& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < p.points.size(); ++i) {
    best = std::min(best, point_segment_distance(Vec2::Zero(), p.points[i],
                                                 p.points[i + 1]));
  }
  if (p.points.size() == 1) best = p.points[0].norm();
  return best;
}

// Indices of the `cap` smallest distances, returned in original order.
std::vector<std::size_t> nearest_indices(const std::vector<double>& distance,
                                         std::size_t cap) {
  std::vector<std::size_t> order(distance.size());
  std::iota(order.begin(), order.end(), 0);
  if (order.size() <= cap) return order;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return distance[a] < distance[b];
  });
  order.resize(cap);
  std::sort(order.begin(), order.end());
  return order;
}

Tensor truncate_rows(const Tensor& vectors, std::size_t cap) {
  if (static_cast<std::size_t>(vectors.rows()) <= cap) return vectors;
  std::vector<double> distance(vectors.rows());
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    const Vec2 mid(0.5 * (vectors(i, 0) + vectors(i, 2)),
                   0.5 * (vectors(i, 1) + vectors(i, 3)));
    distance[i] = mid.norm();
  }
  const auto keep = nearest_indices(distance, cap);
  Tensor out(keep.size(), vectors.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(i) = vectors.row(keep[i]);
  return out;
}

Tensor vectorize_polyline(const MapPolyline& p) {
  const Eigen::Index n = static_cast<Eigen::Index>(p.points.size()) - 1;
  Tensor out = Tensor::Zero(std::max<Eigen::Index>(n, 0), kMapVectorWidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, 0) = p.points[i].x();
    out(i, 1) = p.points[i].y();
    out(i, 2) = p.points[i + 1].x();
    out(i, 3) = p.points[i + 1].y();
    out(i, 4 + static_cast<int>(p.kind)) = 1.0;
  }
  return out;
}

Tensor vectorize_track(const AgentTrack& a, int horizon) {
  std::vector<const AgentState*> observed;
  for (const auto& st : a.states) {
    if (st.t <= horizon) observed.push_back(&st);
  }
  const Eigen::Index n =
      std::max<Eigen::Index>(static_cast<Eigen::Index>(observed.size()) - 1, 0);
  Tensor out = Tensor::Zero(n, kAgentVectorWidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    const AgentState& s0 = *observed[i];
    const AgentState& s1 = *observed[i + 1];
    out(i, 0) = s0.x;
    out(i, 1) = s0.y;
    out(i, 2) = s1.x;
    out(i, 3) = s1.y;
    out(i, 4) = s1.heading;
    out(i, 5) = s1.vx;
    out(i, 6) = s1.vy;
    out(i, 7 + static_cast<int>(a.kind)) = 1.0;
  }
  return out;
}

}  // namespace

void EncoderConfig::validate() const {
  if (hidden <= 0 || n_heads <= 0 || hidden % n_heads != 0) {
    throw ValidationError("EncoderConfig: hidden must be divisible by n_heads");
  }
  if (context_layers < 1 || interaction_layers < 1) {
    throw ValidationError("EncoderConfig: L_c and L_i must be at least 1");
  }
  if (components < 1 || max_polylines < 1 || max_vectors_per_polyline < 1 ||
      future_steps < 1) {
    throw ValidationError("EncoderConfig: sizes must be positive");
  }
  if (!(coord_scale > 0.0)) {
    throw ValidationError("EncoderConfig: coord_scale must be positive");
  }
}

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kVehicle: return "vehicle";
    case AgentKind::kPedestrian: return "pedestrian";
    case AgentKind::kCyclist: return "cyclist";
  }
  return "vehicle";
}

std::string_view to_string(MapKind kind) {
  switch (kind) {
    case MapKind::kLaneCenter: return "lane_center";
    case MapKind::kLaneBoundary: return "lane_boundary";
    case MapKind::kCrosswalk: return "crosswalk";
    case MapKind::kStopLine: return "stop_line";
  }
  return "lane_center";
}

AgentKind parse_agent_kind(std::string_view text) {
  if (text == "vehicle") return AgentKind::kVehicle;
  if (text == "pedestrian") return AgentKind::kPedestrian;
  if (text == "cyclist") return AgentKind::kCyclist;
  throw ValidationError("unknown agent kind '" + std::string(text) + "'");
}

MapKind parse_map_kind(std::string_view text) {
  if (text == "lane_center") return MapKind::kLaneCenter;
  if (text == "lane_boundary") return MapKind::kLaneBoundary;
  if (text == "crosswalk") return MapKind::kCrosswalk;
  if (text == "stop_line") return MapKind::kStopLine;
  throw ValidationError("unknown map kind '" + std::string(text) + "'");
}

const AgentState* AgentTrack::state_at(int t) const {
  auto it = std::lower_bound(
      states.begin(), states.end(), t,
      [](const AgentState& s, int step) { return s.t < step; });
  if (it == states.end() || it->t != t) return nullptr;
  return &*it;
}

const AgentTrack& Scenario::target() const {
  for (const auto& a : agents) {
    if (a.id == target_id) return a;
  }
  throw ValidationError("scenario '" + scenario_id + "': target_id '" +
                        target_id + "' not among agents");
}

void Scenario::validate(bool require_future) const {
  const std::string& id = scenario_id;
  check(!scenario_id.empty(), id, "scenario_id must be non-empty");
  check(dt > 0.0 && finite(dt), id, "dt must be positive");
  check(H >= 1, id, "H must be at least 1");
  check(T >= 1, id, "T must be at least 1");
  std::vector<std::string> ids;
  for (const auto& a : agents) {
    check(!a.id.empty(), id, "agent id must be non-empty");
    ids.push_back(a.id);
    for (std::size_t i = 0; i < a.states.size(); ++i) {
      const AgentState& s = a.states[i];
      check(finite(s.x) && finite(s.y) && finite(s.heading) && finite(s.vx) &&
                finite(s.vy),
            id, "agent '" + a.id + "' has a non-finite state");
      check(s.t >= 1, id, "agent '" + a.id + "' has step index < 1");
      if (i > 0) {
        check(s.t > a.states[i - 1].t, id,
              "agent '" + a.id + "' step indices must be strictly increasing");
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  check(std::adjacent_find(ids.begin(), ids.end()) == ids.end(), id,
        "agent ids must be unique");
  const AgentTrack& tgt = target();
  const int last = require_future ? H + T : H;
  for (int t = 1; t <= last; ++t) {
    check(tgt.state_at(t) != nullptr, id,
          "target is missing its state at step " + std::to_string(t));
  }
  for (const auto& p : map) {
    check(p.points.size() >= 2, id,
          "map polyline '" + p.id + "' needs at least 2 points");
    for (const auto& pt : p.points) {
      check(finite(pt.x()) && finite(pt.y()), id,
            "map polyline '" + p.id + "' has a non-finite point");
    }
  }
}

Scenario scenario_from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  Reader r(doc, "");
  if (r.integer("format_version") != kFormatVersion) {
    Reader::fail("format_version", "unsupported version");
  }
  Scenario s;
  s.scenario_id = r.string("scenario_id");
  s.dt = r.number("dt");
  s.H = r.integer("H");
  s.T = r.integer("T");
  s.target_id = r.string("target_id");
  const json& agents = r.array("agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    s.agents.push_back(parse_agent(agents[i], indexed("agents", i)));
  }
  const json& map = r.array("map");
  for (std::size_t i = 0; i < map.size(); ++i) {
    s.map.push_back(parse_polyline(map[i], indexed("map", i)));
  }
  s.validate();
  return s;
}

std::string scenario_to_json_text(const Scenario& s) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["scenario_id"] = s.scenario_id;
  doc["dt"] = s.dt;
  doc["H"] = s.H;
  doc["T"] = s.T;
  doc["target_id"] = s.target_id;
  json agents = json::array();
  for (const auto& a : s.agents) {
    json states = json::array();
    for (const auto& st : a.states) {
      states.push_back({{"t", st.t}, {"x", st.x}, {"y", st.y},
                        {"heading", st.heading}, {"vx", st.vx},
                        {"vy", st.vy}});
    }
    agents.push_back({{"id", a.id},
                      {"kind", std::string(to_string(a.kind))},
                      {"states", std::move(states)}});
  }
  doc["agents"] = std::move(agents);
  json map = json::array();
  for (const auto& p : s.map) {
    json points = json::array();
    for (const auto& pt : p.points) points.push_back({pt.x(), pt.y()});
    map.push_back({{"id", p.id},
                   {"kind", std::string(to_string(p.kind))},
                   {"points", std::move(points)}});
  }
  doc["map"] = std::move(map);
  return doc.dump(1);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return scenario_from_json_text(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write scenario file " + path.string());
  out << scenario_to_json_text(s) << '\n';
}

std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir) {
  if (std::filesystem::is_regular_file(dir)) return {load_scenario(dir)};
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("not a scenario file or directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

Vec2 FrameTransform::rotate_to_local(const Vec2& v) const {
  const double c = std::cos(heading), s = std::sin(heading);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

Vec2 FrameTransform::rotate_to_world(const Vec2& v) const {
  const double c = std::cos(heading), s = std::sin(heading);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Vec2 FrameTransform::to_local(const Vec2& world) const {
  return rotate_to_local(world - origin);
}

Vec2 FrameTransform::to_world(const Vec2& local) const {
  return rotate_to_world(local) + origin;
}

FrameTransform FrameTransform::inverse() const {
  return {-rotate_to_local(origin), -heading};
}

FrameTransform target_frame(const Scenario& s) {
  const AgentState* st = s.target().state_at(s.H);
  if (st == nullptr) {
    throw MissingHorizonState("scenario '" + s.scenario_id +
                              "': target has no state at step H=" +
                              std::to_string(s.H));
  }
  return {st->position(), st->heading};
}

Scenario transform_scenario(const Scenario& s, const FrameTransform& frame,
                            bool to_world) {
  const FrameTransform f = to_world ? frame.inverse() : frame;
  Scenario out = s;
  for (auto& a : out.agents) {
    for (auto& st : a.states) {
      const Vec2 p = f.to_local(st.position());
      const Vec2 v = f.rotate_to_local({st.vx, st.vy});
      st.x = p.x();
      st.y = p.y();
      st.vx = v.x();
      st.vy = v.y();
      st.heading = wrap_angle(st.heading - f.heading);
    }
  }
  for (auto& p : out.map) {
    for (auto& pt : p.points) pt = f.to_local(pt);
  }
  return out;
}

Scenario to_target_frame(const Scenario& s) {
  return transform_scenario(s, target_frame(s));
}

Vec2 goal_of(const Scenario& s) {
  const AgentState* st = s.target().state_at(s.H + s.T);
  if (st == nullptr) {
    throw MissingHorizonState("scenario '" + s.scenario_id +
                              "': target has no state at step H+T");
  }
  return st->position();
}

std::vector<Vec2> ground_truth_future(const Scenario& s) {
  std::vector<Vec2> out;
  const AgentTrack& tgt = s.target();
  for (int t = s.H + 1; t <= s.H + s.T; ++t) {
    const AgentState* st = tgt.state_at(t);
    if (st == nullptr) {
      throw MissingHorizonState("scenario '" + s.scenario_id +
                                "': target is missing future step " +
                                std::to_string(t));
    }
    out.push_back(st->position());
  }
  return out;
}

VectorizedScene vectorize(const Scenario& s, const EncoderConfig& cfg) {
  VectorizedScene out;
  const auto cap_vectors =
      static_cast<std::size_t>(cfg.max_vectors_per_polyline);
  const auto cap_polylines = static_cast<std::size_t>(cfg.max_polylines);

  std::vector<double> map_distance;
  for (const auto& p : s.map) map_distance.push_back(polyline_distance(p));
  for (std::size_t i : nearest_indices(map_distance, cap_polylines)) {
    Tensor v = vectorize_polyline(s.map[i]);
    if (v.rows() > 0) out.map_polylines.push_back(truncate_rows(v, cap_vectors));
  }

  const AgentTrack& tgt = s.target();
  out.target = truncate_rows(vectorize_track(tgt, s.H), cap_vectors);

  std::vector<const AgentTrack*> others;
  std::vector<double> other_distance;
  for (const auto& a : s.agents) {
    if (a.id == s.target_id) continue;
    const AgentState* last = nullptr;
    for (const auto& st : a.states) {
      if (st.t <= s.H) last = &st;
    }
    if (last == nullptr) continue;
    others.push_back(&a);
    other_distance.push_back(last->position().norm());
  }
  for (std::size_t i : nearest_indices(other_distance, cap_polylines)) {
    Tensor v = vectorize_track(*others[i], s.H);
    if (v.rows() == 0) continue;
    out.others.push_back(truncate_rows(v, cap_vectors));
    out.others_observed_at_horizon.push_back(others[i]->state_at(s.H) !=
                                             nullptr);
    out.other_ids.push_back(others[i]->id);
  }
  return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

Scenario mask_map_by_radius(const Scenario& s, double r) {
  Scenario out = s;
  if (std::isinf(r) && r > 0) return out;
  out.map.clear();
  for (const auto& p : s.map) {
    bool keep = false;
    for (std::size_t i = 0; i + 1 < p.points.size() && !keep; ++i) {
      keep = point_segment_distance(Vec2::Zero(), p.points[i], p.points[i + 1]) < r;
    }
    if (keep) out.map.push_back(p);
  }
  return out;
}

}  // namespace gneva
