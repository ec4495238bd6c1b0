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

#ifndef GNEVA_DISTRIBUTIONS_HPP_
#define GNEVA_DISTRIBUTIONS_HPP_

#include <random>

#include "gneva/special_math.hpp"

namespace gneva {

// Every stochastic routine takes an externally owned generator; generators
// are never shared between threads.
using Rng = std::mt19937_64;

inline constexpr int kGoalDim = 2;

// Normal-Wishart distribution N(mu | eta, (beta Lambda)^-1) W(Lambda | V, nu)
// over the mean and precision of a bivariate Gaussian.
struct NormalWishartParams {
  Vec2 eta = Vec2::Zero();
  double beta = 1.0;
  SPDMatrix2 V;
  double nu = 4.0;

  // Throws DomainError unless beta > 0, nu > D - 1 and eta is finite.
  void validate() const;
};

struct WishartParams {
  SPDMatrix2 V;
  double nu = 4.0;
};

struct StudentTParams {
  Vec2 loc = Vec2::Zero();
  SPDMatrix2 shape;
  double df = 1.0;
};

struct Gaussian2 {
  Vec2 mean = Vec2::Zero();
  SPDMatrix2 precision;
};

struct NormalWishartSample {
  Vec2 mu;
  SPDMatrix2 lambda;
};

struct ExpectedStats {
  double e_log_det = 0.0;      // E_q[log det Lambda]
  double e_mahalanobis = 0.0;  // E_q[(g - mu)^T Lambda (g - mu)]
};

double gaussian_log_density(const Vec2& x, const Gaussian2& g);

double wishart_log_density(const SPDMatrix2& lambda, const WishartParams& w);

double normal_wishart_log_density(const Vec2& mu, const SPDMatrix2& lambda,
                                  const NormalWishartParams& params);

// Bartlett decomposition: Lambda = L A A^T L^T with V = L L^T, A lower
// triangular, A_ii^2 ~ chi^2(nu - i + 1) and A_21 ~ N(0, 1).
SPDMatrix2 sample_wishart(const WishartParams& w, Rng& rng);

NormalWishartSample sample_normal_wishart(const NormalWishartParams& params,
                                          Rng& rng);

ExpectedStats expected_stats(const Vec2& g, const NormalWishartParams& q);

// E_{q(Lambda)} KL(q(mu | Lambda) || p(mu | Lambda)) for one component.
double kl_mean_given_precision(const NormalWishartParams& q,
                               const NormalWishartParams& p);

// KL(W(V_q, nu_q) || W(V_p, nu_p)).
double kl_wishart(const WishartParams& q, const WishartParams& p);

double student_t_log_density(const Vec2& x, const StudentTParams& t);

Vec2 sample_student_t(const StudentTParams& t, Rng& rng);

// Student-t posterior predictive of a single new observation:
// loc = eta, df = nu - 1, shape = (beta + 1) / (beta (nu - 1)) V^-1.
// Throws DegreesOfFreedomTooSmall unless nu > 3.
StudentTParams posterior_predictive_params(const NormalWishartParams& q);

// Exact conjugate update of a Normal-Wishart prior on one observation.
NormalWishartParams conjugate_update(const NormalWishartParams& prior,
                                     const Vec2& g);

}  // namespace gneva

#endif  // GNEVA_DISTRIBUTIONS_HPP_
