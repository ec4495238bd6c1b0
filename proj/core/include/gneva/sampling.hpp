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

#ifndef GNEVA_SAMPLING_HPP_
#define GNEVA_SAMPLING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gneva/dataio.hpp"
#include "gneva/mixture.hpp"

namespace gneva {

struct ScoredCandidate {
  Vec2 location = Vec2::Zero();
  double log_prob = 0.0;
};

struct NmsConfig {
  double radius = 2.0;
  double iou_threshold = 0.0;
  int k = 6;

  // Throws ValidationError unless radius > 0, iou_threshold in [0, 1], k >= 1.
  void validate() const;
};

// Intersection over union of two radius-r discs centred at p1 and p2.
double circle_iou(const Vec2& p1, const Vec2& p2, double r);

// Greedy suppression: repeatedly keeps the most probable remaining
// candidate and drops every remaining one whose IoU with it exceeds the
// threshold. Ties in log_prob keep input order. Not truncated to k.
// Throws EmptyCandidatePool on empty input.
std::vector<ScoredCandidate> nms_select(std::span<const ScoredCandidate> candidates,
                                        const NmsConfig& cfg);

struct Region {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  // Throws ValidationError when not finite or degenerate.
  void validate() const;
};

enum class CandidateMode { kGrid, kSample };

std::string_view to_string(CandidateMode mode);
CandidateMode parse_candidate_mode(std::string_view text);

struct CandidateConfig {
  CandidateMode mode = CandidateMode::kGrid;
  double spacing = 0.5;
  double margin = 10.0;
  std::size_t max_cells = 1'000'000;
  std::size_t samples = 4096;  // sample mode only
  std::uint64_t seed = 0;      // sample mode only

  void validate() const;
};

// Number of grid points along one axis: floor(extent / spacing) + 1.
std::size_t grid_points(double extent, double spacing);

// Row-major grid points (y outer, x inner) starting at (x_min, y_min).
// Throws RegionTooLarge above max_cells.
std::vector<Vec2> grid_locations(const Region& region, double spacing,
                                 std::size_t max_cells = 1'000'000);

// Grid points scored by the weighted predictive log density.
std::vector<ScoredCandidate> generate_candidates(
    const MixturePosterior& mix, std::span<const double> weights,
    const Region& region, double spacing, std::size_t max_cells = 1'000'000);

// Seeded draws from the weighted Student-t mixture, scored like the grid.
std::vector<ScoredCandidate> sample_candidates(const MixturePosterior& mix,
                                               std::span<const double> weights,
                                               std::size_t count,
                                               std::uint64_t seed);

// Bounding box of the map points inflated by `margin`. A scenario without
// map points falls back to the target's position (the origin of the target
// frame) together with `extra_points`.
Region scene_region(const Scenario& target_frame_scenario, double margin,
                    std::span<const Vec2> extra_points = {});

}  // namespace gneva

#endif  // GNEVA_SAMPLING_HPP_
