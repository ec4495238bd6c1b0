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

#include "gneva/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "gneva/errors.hpp"
#include "gneva/parallel.hpp"

namespace gneva {

void NmsConfig::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ValidationError("nms radius must be positive");
  }
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError("nms iou threshold must lie in [0, 1]");
  }
  if (k < 1) throw ValidationError("nms k must be at least 1");
}

double circle_iou(const Vec2& p1, const Vec2& p2, double r) {
  if (!(r > 0.0)) throw DomainError("circle_iou: radius must be positive");
  const double d = (p1 - p2).norm();
  if (d >= 2.0 * r) return 0.0;
  const double area = std::numbers::pi * r * r;
  const double lens = 2.0 * r * r * std::acos(d / (2.0 * r)) -
                      0.5 * d * std::sqrt(4.0 * r * r - d * d);
  return lens / (2.0 * area - lens);
}

std::vector<ScoredCandidate> nms_select(std::span<const ScoredCandidate> candidates,
                                        const NmsConfig& cfg) {
  cfg.validate();
  if (candidates.empty()) throw EmptyCandidatePool("nms_select: no candidates");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].log_prob > candidates[b].log_prob;
  });
  std::vector<bool> removed(order.size(), false);
  std::vector<ScoredCandidate> selected;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (removed[i]) continue;
    const ScoredCandidate& best = candidates[order[i]];
    selected.push_back(best);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!removed[j] &&
          circle_iou(best.location, candidates[order[j]].location, cfg.radius) >
              cfg.iou_threshold) {
        removed[j] = true;
      }
    }
  }
  return selected;
}

void Region::validate() const {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) ||
      !std::isfinite(y_max)) {
    throw ValidationError("region bounds must be finite");
  }
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw ValidationError("region must have positive width and height");
  }
}

std::string_view to_string(CandidateMode mode) {
  return mode == CandidateMode::kGrid ? "grid" : "sample";
}

CandidateMode parse_candidate_mode(std::string_view text) {
  if (text == "grid") return CandidateMode::kGrid;
  if (text == "sample") return CandidateMode::kSample;
  throw ValidationError("unknown candidate mode '" + std::string(text) + "'");
}

void CandidateConfig::validate() const {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ValidationError("candidate spacing must be positive");
  }
  if (!(margin >= 0.0)) throw ValidationError("candidate margin must be >= 0");
  if (max_cells == 0) throw ValidationError("candidate cell cap must be >= 1");
  if (mode == CandidateMode::kSample && samples == 0) {
    throw ValidationError("candidate sample count must be >= 1");
  }
}

std::size_t grid_points(double extent, double spacing) {
  // The small slack keeps exact multiples (10 / 0.5) from losing a point.
  return static_cast<std::size_t>(std::floor(extent / spacing + 1e-9)) + 1;
}

std::vector<Vec2> grid_locations(const Region& region, double spacing,
                                 std::size_t max_cells) {
  region.validate();
  if (!(spacing > 0.0)) throw ValidationError("grid spacing must be positive");
  const double nx_real = std::floor(region.width() / spacing + 1e-9) + 1.0;
  const double ny_real = std::floor(region.height() / spacing + 1e-9) + 1.0;
  if (nx_real * ny_real > static_cast<double>(max_cells)) {
    throw RegionTooLarge("candidate grid of " + std::to_string(nx_real * ny_real) +
                         " cells exceeds the cap of " + std::to_string(max_cells));
  }
  const std::size_t nx = grid_points(region.width(), spacing);
  const std::size_t ny = grid_points(region.height(), spacing);
  std::vector<Vec2> points;
  points.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      points.emplace_back(region.x_min + static_cast<double>(ix) * spacing,
                          region.y_min + static_cast<double>(iy) * spacing);
    }
  }
  return points;
}

namespace {

std::vector<ScoredCandidate> score(const PredictiveMixture& pm,
                                   const std::vector<Vec2>& points) {
  std::vector<ScoredCandidate> out(points.size());
  parallel_for(points.size(), worker_count(), [&](std::size_t i) {
    out[i] = {points[i], pm.log_density(points[i])};
  });
  return out;
}

}  // namespace

std::vector<ScoredCandidate> generate_candidates(const MixturePosterior& mix,
                                                 std::span<const double> weights,
                                                 const Region& region,
                                                 double spacing,
                                                 std::size_t max_cells) {
  const std::vector<Vec2> points = grid_locations(region, spacing, max_cells);
  return score(PredictiveMixture(mix, weights), points);
}

std::vector<ScoredCandidate> sample_candidates(const MixturePosterior& mix,
                                               std::span<const double> weights,
                                               std::size_t count,
                                               std::uint64_t seed) {
  const PredictiveMixture pm(mix, weights);
  Rng rng(seed);
  std::vector<double> probs(weights.begin(), weights.end());
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  std::vector<Vec2> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    points.push_back(sample_student_t(pm.components()[pick(rng)], rng));
  }
  return score(pm, points);
}

Region scene_region(const Scenario& s, double margin,
                    std::span<const Vec2> extra_points) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  auto include = [&](const Vec2& p) {
    x0 = std::min(x0, p.x());
    y0 = std::min(y0, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  };
  for (const auto& poly : s.map) {
    for (const auto& p : poly.points) include(p);
  }
  if (!std::isfinite(x0)) {
    include(s.target().state_at(s.H)->position());
    for (const auto& p : extra_points) include(p);
  }
  return {x0 - margin, y0 - margin, x1 + margin, y1 + margin};
}

}  // namespace gneva
