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

#ifndef GNEVA_MODEL_IO_HPP_
#define GNEVA_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "gneva/encoders.hpp"
#include "gneva/trajectory.hpp"

namespace gneva {

inline constexpr int kModelFormatVersion = 1;

// A tape together with the model whose slots index into it.
struct SpatialBundle {
  explicit SpatialBundle(const EncoderConfig& cfg, std::uint64_t seed = 0)
      : tape(seed), model(tape, cfg) {}
  ParamTape tape;
  SpatialModel model;
};

struct TrajectoryBundle {
  explicit TrajectoryBundle(const EncoderConfig& cfg, std::uint64_t seed = 0)
      : tape(seed), net(tape, cfg) {}
  ParamTape tape;
  TrajectoryNet net;
};

// {"format_version": 1, "kind": ..., "config": {...}, "params": {name: [...]}}
std::string model_to_json_text(std::string_view kind, const EncoderConfig& cfg,
                               const ParamTape& tape);

// Parses the document, checks the format version and kind, rebuilds the
// model from its config and copies every parameter after checking that the
// names and sizes match exactly. Throws ParseError or ShapeMismatch.
SpatialBundle spatial_from_json_text(std::string_view text);
TrajectoryBundle trajectory_from_json_text(std::string_view text);

void save_spatial(const SpatialBundle& b, const std::filesystem::path& path);
void save_trajectory(const TrajectoryBundle& b, const std::filesystem::path& path);
SpatialBundle load_spatial(const std::filesystem::path& path);
TrajectoryBundle load_trajectory(const std::filesystem::path& path);

}  // namespace gneva

#endif  // GNEVA_MODEL_IO_HPP_
