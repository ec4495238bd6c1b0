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

#ifndef GNEVA_MIXTURE_HPP_
#define GNEVA_MIXTURE_HPP_

#include <span>
#include <vector>

#include "gneva/distributions.hpp"

namespace gneva {

// Variational posterior over the C mixture components plus the log mixing
// coefficients used by the z-posterior.
struct MixturePosterior {
  std::vector<NormalWishartParams> components;
  std::vector<double> log_pi;

  std::size_t size() const { return components.size(); }

  // Uniform mixing weights pi_c = 1/C.
  static MixturePosterior with_uniform_weights(
      std::vector<NormalWishartParams> components);

  // Throws DomainError on an empty mixture, mismatched sizes, mixing weights
  // that do not sum to one (1e-10), or an invalid component.
  void validate() const;
};

struct Responsibilities {
  std::vector<double> q_z;
};

std::vector<double> uniform_weights(std::size_t count);

// E_q[log N(g | mu, Lambda^-1)] under one Normal-Wishart factor.
double expected_log_emission(const Vec2& g, const NormalWishartParams& q);

Responsibilities z_posterior(const Vec2& g, const MixturePosterior& mix);

struct ElboTerms {
  double expected_log_likelihood = 0.0;  // sum_c q(z=c) E_q[log p(g | c)]
  double kl_mean = 0.0;
  double kl_precision = 0.0;
  double kl_assignment = 0.0;  // KL(q(z) || prior_pi)
  Responsibilities responsibilities;

  double value() const {
    return expected_log_likelihood - kl_mean - kl_precision - kl_assignment;
  }
};

ElboTerms elbo_terms(const Vec2& g, const MixturePosterior& mix,
                     const NormalWishartParams& prior,
                     std::span<const double> prior_pi);

double elbo(const Vec2& g, const MixturePosterior& mix,
            const NormalWishartParams& prior, std::span<const double> prior_pi);

// Partial derivatives of a scalar with respect to one Normal-Wishart factor.
// d_V is the symmetric gradient with respect to the full 2x2 matrix V.
struct NormalWishartGradient {
  Vec2 d_eta = Vec2::Zero();
  double d_beta = 0.0;
  Mat2 d_V = Mat2::Zero();
  double d_nu = 0.0;
};

struct ElboGradient {
  ElboTerms terms;
  std::vector<NormalWishartGradient> components;
  NormalWishartGradient prior;
};

// ELBO value together with its gradient with respect to every component and
// the shared prior. Mixing weights and prior_pi are treated as constants.
ElboGradient elbo_gradient(const Vec2& g, const MixturePosterior& mix,
                           const NormalWishartParams& prior,
                           std::span<const double> prior_pi);

// log sum_c weights_c tau(g*; predictive of component c).
double predictive_log_density(const Vec2& g_star, const MixturePosterior& mix,
                              std::span<const double> weights);

// Precomputed per-component predictives for repeated evaluation.
class PredictiveMixture {
 public:
  PredictiveMixture(const MixturePosterior& mix,
                    std::span<const double> weights);

  double log_density(const Vec2& x) const;
  const std::vector<StudentTParams>& components() const { return components_; }
  const std::vector<double>& log_weights() const { return log_weights_; }

 private:
  std::vector<StudentTParams> components_;
  std::vector<double> log_weights_;
  std::vector<SPDMatrix2> inverse_shapes_;
  std::vector<double> log_norms_;
};

// Exact log p(g) under the generative model with a shared prior.
double prior_log_evidence(const Vec2& g, const NormalWishartParams& prior,
                          std::span<const double> prior_pi);

}  // namespace gneva

#endif  // GNEVA_MIXTURE_HPP_
