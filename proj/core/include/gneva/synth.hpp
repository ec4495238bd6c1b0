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

#ifndef GNEVA_SYNTH_HPP_
#define GNEVA_SYNTH_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

#include "gneva/dataio.hpp"

namespace gneva {

enum class SceneKind { kStraight, kTurn, kMerge };

std::string_view to_string(SceneKind kind);
SceneKind parse_scene_kind(std::string_view text);

struct SynthConfig {
  int n = 100;
  std::uint64_t seed = 0;
  int H = 10;
  int T = 30;
  double dt = 0.1;
};

// Seeded synthetic scenes in a randomly placed world frame. The target's
// step-(H+T) position is the ground-truth goal.
//   straight: constant speed along a straight lane with an unobserved speed
//             change at step H;
//   turn:     approach to a junction with a left and a right exit arc; the
//             exit is a fair coin flip made after step H;
//   merge:    an on-ramp converging into a main lane with a lead vehicle.
// Throws ValidationError when n < 1.
std::vector<Scenario> synth_generate(const SynthConfig& cfg, SceneKind kind);

}  // namespace gneva

#endif  // GNEVA_SYNTH_HPP_
