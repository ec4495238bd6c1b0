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


#include "run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gneva/errors.hpp"

namespace gneva::cli {
namespace {

using json = nlohmann::json;

template <typename T>
T as(const json& v, std::string_view key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key '" + std::string(key) + "' has the wrong type");
  }
}

// Integers must be given as integral JSON numbers; 1.5 for a count is an error.
template <typename T>
T as_integer(const json& v, std::string_view key) {
  if (!v.is_number_integer()) {
    throw ValidationError("config key '" + std::string(key) + "' must be an integer");
  }
  return v.get<T>();
}

struct Field {
  std::function<void(RunConfig&, const json&, std::string_view)> set;
  std::function<json(const RunConfig&)> get;
};

#define GNEVA_REAL(key, member)                                              \
  {key,                                                                      \
   {[](RunConfig& c, const json& v, std::string_view k) {                    \
      c.member = as<double>(v, k);                                           \
    },                                                                       \
    [](const RunConfig& c) { return json(c.member); }}}
#define GNEVA_INT(key, member, type)                                         \
  {key,                                                                      \
   {[](RunConfig& c, const json& v, std::string_view k) {                    \
      c.member = as_integer<type>(v, k);                                     \
    },                                                                       \
    [](const RunConfig& c) { return json(c.member); }}}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      GNEVA_INT("encoder.hidden", encoder.hidden, int),
      GNEVA_INT("encoder.n_heads", encoder.n_heads, int),
      GNEVA_INT("encoder.context_layers", encoder.context_layers, int),
      GNEVA_INT("encoder.interaction_layers", encoder.interaction_layers, int),
      GNEVA_INT("encoder.components", encoder.components, int),
      GNEVA_INT("encoder.max_polylines", encoder.max_polylines, int),
      GNEVA_INT("encoder.max_vectors_per_polyline", encoder.max_vectors_per_polyline, int),
      GNEVA_REAL("encoder.coord_scale", encoder.coord_scale),
      GNEVA_INT("encoder.future_steps", encoder.future_steps, int),
      GNEVA_INT("train.batch_size", train.batch_size, int),
      GNEVA_INT("train.epochs", train.epochs, int),
      GNEVA_INT("train.max_steps", train.max_steps, long),
      GNEVA_REAL("train.peak_lr", train.peak_lr),
      GNEVA_INT("train.warmup_steps", train.warmup_steps, long),
      GNEVA_REAL("train.final_lr", train.final_lr),
      GNEVA_REAL("train.weight_decay", train.weight_decay),
      GNEVA_REAL("train.ce_weight", train.ce_weight),
      GNEVA_INT("train.seed", train.seed, std::uint64_t),
      {"train.init_from_goals",
       {[](RunConfig& c, const json& v, std::string_view k) {
          c.init_from_goals = as<bool>(v, k);
        },
        [](const RunConfig& c) { return json(c.init_from_goals); }}},
      GNEVA_REAL("nms.radius", nms.radius),
      GNEVA_REAL("nms.iou_threshold", nms.iou_threshold),
      GNEVA_INT("nms.k", nms.k, int),
      {"candidates.mode",
       {[](RunConfig& c, const json& v, std::string_view k) {
          c.candidates.mode = parse_candidate_mode(as<std::string>(v, k));
        },
        [](const RunConfig& c) { return json(std::string(to_string(c.candidates.mode))); }}},
      GNEVA_REAL("candidates.spacing", candidates.spacing),
      GNEVA_REAL("candidates.margin", candidates.margin),
      GNEVA_INT("candidates.max_cells", candidates.max_cells, std::size_t),
      GNEVA_INT("candidates.samples", candidates.samples, std::size_t),
      GNEVA_INT("candidates.seed", candidates.seed, std::uint64_t),
  };
  return table;
}

#undef GNEVA_REAL
#undef GNEVA_INT

void set_parsed(RunConfig& cfg, std::string_view key, const json& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) {
    throw ValidationError("unknown config key '" + std::string(key) + "'");
  }
  it->second.set(cfg, value, key);
}

}  // namespace

void RunConfig::set(std::string_view key, const std::string& json_value) {
  json value = json::parse(json_value, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = json_value;
  set_parsed(*this, key, value);
}

void RunConfig::validate() const {
  encoder.validate();
  train.validate();
  nms.validate();
  candidates.validate();
}

std::string RunConfig::to_json_text() const {
  json out = json::object();
  for (const auto& [key, field] : fields()) out[key] = field.get(*this);
  return out.dump(2) + "\n";
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& entry : fields()) out.push_back(entry.first);
  return out;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const json doc = json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ParseError("config " + path.string() + " is not a JSON object");
  }
  RunConfig cfg;
  for (const auto& [key, value] : doc.items()) set_parsed(cfg, key, value);
  return cfg;
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("override '" + item + "' is not of the form key=value");
    }
    cfg.set(std::string_view(item).substr(0, eq), item.substr(eq + 1));
  }
}

}  // namespace gneva::cli
