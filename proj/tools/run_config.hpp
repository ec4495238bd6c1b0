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


#ifndef GNEVA_TOOLS_RUN_CONFIG_HPP_
#define GNEVA_TOOLS_RUN_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gneva/encoder_config.hpp"
#include "gneva/sampling.hpp"
#include "gneva/training.hpp"

namespace gneva::cli {

// Everything a run can be configured with. The on-disk form is a JSON object
// with flat dotted keys ("train.peak_lr", "nms.radius", ...); any key can be
// overridden from the command line with --set key=value.
struct RunConfig {
  EncoderConfig encoder;
  TrainConfig train;
  NmsConfig nms;
  CandidateConfig candidates;
  // Start the spatial model from k-means goal anchors and a goal-scaled
  // prior; see initialize_from_goals.
  bool init_from_goals = true;

  void set(std::string_view key, const std::string& json_value);
  void validate() const;
  std::string to_json_text() const;
  static std::vector<std::string> keys();
};

RunConfig load_run_config(const std::filesystem::path& path);

// Applies "key=value" overrides in order. Values are parsed as JSON when
// possible, otherwise taken as a bare string.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace gneva::cli

#endif  // GNEVA_TOOLS_RUN_CONFIG_HPP_
