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


// Independent oracles used by the test and acceptance suites. Nothing here
// calls into the closed-form code it is meant to check: densities, samplers
// and special functions are re-derived from their definitions.

#ifndef GNEVA_VERIFY_ORACLES_HPP_
#define GNEVA_VERIFY_ORACLES_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include "gneva/distributions.hpp"
#include "gneva/sampling.hpp"

namespace gneva::verify {

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;

  // |value - mean| in units of the standard error.
  double z_score(double value) const;
};

// Bartlett-decomposition Wishart sampler and Normal-Wishart joint draw.
Mat2 bartlett_wishart(const Mat2& scale, double dof, Rng& rng);
struct JointDraw {
  Vec2 mean;
  Mat2 precision;
};
JointDraw draw_normal_wishart(const NormalWishartParams& p, Rng& rng);

// Log densities written from the textbook definitions (std::lgamma only).
double gaussian_log_pdf(const Vec2& x, const Vec2& mean, const Mat2& precision);
double wishart_log_pdf(const Mat2& lambda, const Mat2& scale, double dof);

// E_{q(Lambda)} KL(q(mu | Lambda) || p(mu | Lambda)) as a plain average of
// log q(mu | Lambda) - log p(mu | Lambda) over joint draws from q.
McEstimate mc_kl_mean_given_precision(const NormalWishartParams& q,
                                      const NormalWishartParams& p,
                                      std::size_t samples, Rng& rng);
McEstimate mc_kl_wishart(const WishartParams& q, const WishartParams& p,
                         std::size_t samples, Rng& rng);

struct McExpectedStats {
  McEstimate e_log_det;
  McEstimate e_mahalanobis;
};
McExpectedStats mc_expected_stats(const Vec2& g, const NormalWishartParams& q,
                                  std::size_t samples, Rng& rng);

// log E_{mu, Lambda ~ prior}[N(g | mu, Lambda^-1)]; the standard error is
// propagated through the log by the delta method. Uniform mixture weights
// cancel because every component shares the prior.
McEstimate mc_prior_log_evidence(const Vec2& g, const NormalWishartParams& prior,
                                 std::size_t samples, Rng& rng);

// Literal transcription of the greedy goal-sampling loop: repeatedly take
// the most probable remaining candidate and drop everything overlapping it
// by more than the threshold. Returns indices into `pool`, no truncation.
std::vector<std::size_t> brute_force_nms(const std::vector<ScoredCandidate>& pool,
                                         double radius, double iou_threshold);

// Equal-radius circle IoU from the circular-segment area formula.
double segment_circle_iou(double radius, double distance);

// Hit-or-miss estimate of the IoU of two radius-r circles d apart.
McEstimate mc_circle_iou(double radius, double distance, std::size_t samples,
                         Rng& rng);

// Composite trapezoid rule for a density over [lo, hi] with n points per axis.
double trapezoid_2d(const std::function<double(const Vec2&)>& density,
                    const Vec2& lo, const Vec2& hi, std::size_t n);

}  // namespace gneva::verify

#endif  // GNEVA_VERIFY_ORACLES_HPP_
