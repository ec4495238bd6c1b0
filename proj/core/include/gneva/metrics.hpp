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

#ifndef GNEVA_METRICS_HPP_
#define GNEVA_METRICS_HPP_

#include <string>
#include <vector>

#include "gneva/special_math.hpp"

namespace gneva {

inline constexpr double kMissThreshold = 2.0;  // meters

struct MetricReport {
  double made_k = 0.0;
  double mfde_k = 0.0;
  double miss_rate_k = 0.0;
  int k = 0;
  std::size_t n_scenarios = 0;
};

using Trajectory = std::vector<Vec2>;

// Per scenario, minADE and minFDE are each minimized over the first
// min(k, available) predictions; a miss is a minimum endpoint error above
// 2 m. Throws HorizonMismatch when a prediction length differs from its
// ground truth, ValidationError on k < 1, mismatched scenario counts, or a
// scenario without predictions.
MetricReport displacement_metrics(const std::vector<std::vector<Trajectory>>& predictions,
                                  const std::vector<Trajectory>& ground_truth, int k);

std::string report_to_json_text(const MetricReport& report);
// Aligned two-column table.
std::string report_to_table(const MetricReport& report);

}  // namespace gneva

#endif  // GNEVA_METRICS_HPP_
