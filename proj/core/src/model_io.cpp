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

#include "gneva/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gneva/errors.hpp"

namespace gneva {
namespace {

using nlohmann::json;

json config_to_json(const EncoderConfig& c) {
  return {{"hidden", c.hidden},
          {"n_heads", c.n_heads},
          {"context_layers", c.context_layers},
          {"interaction_layers", c.interaction_layers},
          {"components", c.components},
          {"max_polylines", c.max_polylines},
          {"max_vectors_per_polyline", c.max_vectors_per_polyline},
          {"coord_scale", c.coord_scale},
          {"future_steps", c.future_steps}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.hidden = j.at("hidden").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.context_layers = j.at("context_layers").get<int>();
  c.interaction_layers = j.at("interaction_layers").get<int>();
  c.components = j.at("components").get<int>();
  c.max_polylines = j.at("max_polylines").get<int>();
  c.max_vectors_per_polyline = j.at("max_vectors_per_polyline").get<int>();
  c.coord_scale = j.at("coord_scale").get<double>();
  c.future_steps = j.at("future_steps").get<int>();
  c.validate();
  return c;
}

json parse_model(std::string_view text, std::string_view kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") ||
      doc["format_version"] != kModelFormatVersion) {
    throw ParseError("model file: unsupported or missing format_version");
  }
  if (!doc.contains("kind") || doc["kind"] != kind) {
    throw ParseError("model file: expected kind '" + std::string(kind) + "'");
  }
  return doc;
}

void copy_params(const json& params, ParamTape& tape) {
  if (!params.is_object()) throw ParseError("model file: params must be an object");
  std::set<std::string> seen;
  auto values = tape.values();
  for (const auto& entry : tape.entries()) {
    if (!params.contains(entry.name)) {
      throw ShapeMismatch("model file: missing parameter '" + entry.name + "'");
    }
    const json& arr = params[entry.name];
    if (!arr.is_array() || arr.size() != entry.slot.size()) {
      throw ShapeMismatch("model file: parameter '" + entry.name + "' has " +
                          std::to_string(arr.is_array() ? arr.size() : 0) +
                          " values, expected " + std::to_string(entry.slot.size()));
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) {
        throw ParseError("model file: non-numeric value in '" + entry.name + "'");
      }
      values[entry.slot.offset + i] = arr[i].get<double>();
    }
    seen.insert(entry.name);
  }
  for (const auto& [name, _] : params.items()) {
    if (!seen.count(name)) {
      throw ShapeMismatch("model file: unexpected parameter '" + name + "'");
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

template <typename Bundle>
Bundle bundle_from_json(std::string_view text, std::string_view kind) {
  const json doc = parse_model(text, kind);
  try {
    Bundle b(config_from_json(doc.at("config")));
    copy_params(doc.at("params"), b.tape);
    return b;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

}  // namespace

std::string model_to_json_text(std::string_view kind, const EncoderConfig& cfg,
                               const ParamTape& tape) {
  json params = json::object();
  const auto values = tape.values();
  for (const auto& entry : tape.entries()) {
    params[entry.name] = std::vector<double>(
        values.begin() + static_cast<std::ptrdiff_t>(entry.slot.offset),
        values.begin() + static_cast<std::ptrdiff_t>(entry.slot.offset + entry.slot.size()));
  }
  json doc = {{"format_version", kModelFormatVersion},
              {"kind", kind},
              {"config", config_to_json(cfg)},
              {"params", std::move(params)}};
  return doc.dump();
}

SpatialBundle spatial_from_json_text(std::string_view text) {
  return bundle_from_json<SpatialBundle>(text, "spatial");
}

TrajectoryBundle trajectory_from_json_text(std::string_view text) {
  return bundle_from_json<TrajectoryBundle>(text, "trajectory");
}

void save_spatial(const SpatialBundle& b, const std::filesystem::path& path) {
  write_file(path, model_to_json_text("spatial", b.model.config(), b.tape));
}

void save_trajectory(const TrajectoryBundle& b, const std::filesystem::path& path) {
  write_file(path, model_to_json_text("trajectory", b.net.config(), b.tape));
}

SpatialBundle load_spatial(const std::filesystem::path& path) {
  return spatial_from_json_text(read_file(path));
}

TrajectoryBundle load_trajectory(const std::filesystem::path& path) {
  return trajectory_from_json_text(read_file(path));
}

}  // namespace gneva
