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

#include "gneva/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gneva/errors.hpp"

namespace gneva {

MetricReport displacement_metrics(const std::vector<std::vector<Trajectory>>& predictions,
                                  const std::vector<Trajectory>& ground_truth, int k) {
  if (k < 1) throw ValidationError("metrics: k must be at least 1");
  if (predictions.size() != ground_truth.size()) {
    throw ValidationError("metrics: prediction and ground-truth scenario counts differ");
  }
  MetricReport report;
  report.k = k;
  report.n_scenarios = ground_truth.size();
  if (ground_truth.empty()) return report;

  double ade_sum = 0.0, fde_sum = 0.0, misses = 0.0;
  for (std::size_t s = 0; s < ground_truth.size(); ++s) {
    const Trajectory& gt = ground_truth[s];
    const auto& preds = predictions[s];
    if (preds.empty()) {
      throw ValidationError("metrics: scenario " + std::to_string(s) +
                            " has no predictions");
    }
    if (gt.empty()) throw HorizonMismatch("metrics: empty ground truth");
    const std::size_t used = std::min<std::size_t>(k, preds.size());
    double best_ade = std::numeric_limits<double>::infinity();
    double best_fde = best_ade;
    for (std::size_t j = 0; j < used; ++j) {
      if (preds[j].size() != gt.size()) {
        throw HorizonMismatch("metrics: prediction has " +
                              std::to_string(preds[j].size()) +
                              " waypoints, ground truth has " +
                              std::to_string(gt.size()));
      }
      double ade = 0.0;
      for (std::size_t t = 0; t < gt.size(); ++t) ade += (preds[j][t] - gt[t]).norm();
      ade /= static_cast<double>(gt.size());
      best_ade = std::min(best_ade, ade);
      best_fde = std::min(best_fde, (preds[j].back() - gt.back()).norm());
    }
    ade_sum += best_ade;
    fde_sum += best_fde;
    if (best_fde > kMissThreshold) misses += 1.0;
  }
  const double n = static_cast<double>(ground_truth.size());
  report.made_k = ade_sum / n;
  report.mfde_k = fde_sum / n;
  report.miss_rate_k = misses / n;
  return report;
}

std::string report_to_json_text(const MetricReport& r) {
  nlohmann::json doc = {{"k", r.k},
                        {"n_scenarios", r.n_scenarios},
                        {"made_k", r.made_k},
                        {"mfde_k", r.mfde_k},
                        {"miss_rate_k", r.miss_rate_k}};
  return doc.dump(1);
}

std::string report_to_table(const MetricReport& r) {
  const std::string k = std::to_string(r.k);
  char buf[96];
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::string& value) {
    std::snprintf(buf, sizeof buf, "%-10s %12s\n", name.c_str(), value.c_str());
    out << buf;
  };
  auto fixed = [&](double v) {
    char num[32];
    std::snprintf(num, sizeof num, "%.4f", v);
    return std::string(num);
  };
  row("scenarios", std::to_string(r.n_scenarios));
  row("mADE_" + k, fixed(r.made_k));
  row("mFDE_" + k, fixed(r.mfde_k));
  row("MR_" + k, fixed(r.miss_rate_k));
  return out.str();
}

}  // namespace gneva
