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

#include "gneva/mixture.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "gneva/errors.hpp"

namespace gneva {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kD = static_cast<double>(kGoalDim);

void check_simplex(std::span<const double> p, std::size_t expected,
                   const char* what) {
  if (p.size() != expected) {
    throw DomainError(std::string(what) + ": expected " +
                      std::to_string(expected) + " entries, got " +
                      std::to_string(p.size()));
  }
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw DomainError(std::string(what) + ": negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-8) {
    throw DomainError(std::string(what) + ": entries must sum to one");
  }
}

Mat2 outer(const Vec2& a) { return a * a.transpose(); }

}  // namespace

MixturePosterior MixturePosterior::with_uniform_weights(
    std::vector<NormalWishartParams> components) {
  MixturePosterior mix;
  const double log_w = -std::log(static_cast<double>(components.size()));
  mix.log_pi.assign(components.size(), log_w);
  mix.components = std::move(components);
  return mix;
}

void MixturePosterior::validate() const {
  if (components.empty()) {
    throw DomainError("MixturePosterior: at least one component required");
  }
  if (log_pi.size() != components.size()) {
    throw DomainError("MixturePosterior: log_pi size mismatch");
  }
  double sum = 0.0;
  for (double lp : log_pi) sum += std::exp(lp);
  if (std::abs(sum - 1.0) > 1e-10) {
    throw DomainError("MixturePosterior: mixing weights do not sum to one");
  }
  for (const auto& c : components) c.validate();
}

std::vector<double> uniform_weights(std::size_t count) {
  return std::vector<double>(count, 1.0 / static_cast<double>(count));
}

double expected_log_emission(const Vec2& g, const NormalWishartParams& q) {
  const ExpectedStats s = expected_stats(g, q);
  return 0.5 * s.e_log_det - 0.5 * kD * kLog2Pi - 0.5 * s.e_mahalanobis;
}

Responsibilities z_posterior(const Vec2& g, const MixturePosterior& mix) {
  mix.validate();
  std::vector<double> logits(mix.size());
  for (std::size_t c = 0; c < mix.size(); ++c) {
    logits[c] = mix.log_pi[c] + expected_log_emission(g, mix.components[c]);
  }
  const double norm = log_sum_exp(logits);
  Responsibilities r;
  r.q_z.resize(mix.size());
  for (std::size_t c = 0; c < mix.size(); ++c) {
    r.q_z[c] = std::exp(logits[c] - norm);
  }
  return r;
}

ElboTerms elbo_terms(const Vec2& g, const MixturePosterior& mix,
                     const NormalWishartParams& prior,
                     std::span<const double> prior_pi) {
  mix.validate();
  prior.validate();
  check_simplex(prior_pi, mix.size(), "elbo: prior_pi");
  ElboTerms t;
  t.responsibilities = z_posterior(g, mix);
  const auto& r = t.responsibilities.q_z;
  for (std::size_t c = 0; c < mix.size(); ++c) {
    const auto& q = mix.components[c];
    t.expected_log_likelihood += r[c] * expected_log_emission(g, q);
    t.kl_mean += kl_mean_given_precision(q, prior);
    t.kl_precision += kl_wishart({q.V, q.nu}, {prior.V, prior.nu});
    if (r[c] > 0.0) {
      t.kl_assignment += r[c] * (std::log(r[c]) - std::log(prior_pi[c]));
    }
  }
  return t;
}

double elbo(const Vec2& g, const MixturePosterior& mix,
            const NormalWishartParams& prior,
            std::span<const double> prior_pi) {
  return elbo_terms(g, mix, prior, prior_pi).value();
}

ElboGradient elbo_gradient(const Vec2& g, const MixturePosterior& mix,
                           const NormalWishartParams& prior,
                           std::span<const double> prior_pi) {
  ElboGradient out;
  out.terms = elbo_terms(g, mix, prior, prior_pi);
  const auto& r = out.terms.responsibilities.q_z;
  const std::size_t C = mix.size();

  // With r = softmax(log_pi + E), the assignment part of the bound equals
  // LSE(log_pi + E) + sum_c r_c (log prior_pi_c - log_pi_c); its derivative
  // with respect to E_c is r_c (1 + b_c - sum_j r_j b_j).
  double mean_b = 0.0;
  std::vector<double> b(C);
  for (std::size_t c = 0; c < C; ++c) {
    b[c] = std::log(prior_pi[c]) - mix.log_pi[c];
    mean_b += r[c] * b[c];
  }

  const SPDMatrix2 v0_inv = spd_factorize(prior.V).inverse;
  const Mat2 v0_inv_m = v0_inv.matrix();
  const double psi_nu0 = multivariate_digamma(0.5 * prior.nu, kGoalDim);
  const double log_det_v0 = spd_factorize(prior.V).log_det;

  out.components.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const auto& q = mix.components[c];
    auto& grad = out.components[c];
    const double w = r[c] * (1.0 + b[c] - mean_b);
    const SpdFactorization fq = spd_factorize(q.V);
    const Mat2 vq_inv = fq.inverse.matrix();
    const Mat2 vq = q.V.matrix();
    const double trigamma_q = multivariate_trigamma(0.5 * q.nu, kGoalDim);

    // Expected log emission E_c.
    const Vec2 d = g - q.eta;
    grad.d_eta += w * q.nu * (vq * d);
    grad.d_beta += w * 0.5 * kD / (q.beta * q.beta);
    grad.d_V += w * (0.5 * vq_inv - 0.5 * q.nu * outer(d));
    grad.d_nu += w * (0.25 * trigamma_q - 0.5 * q.V.quadratic_form(d));

    // -KL(q(mu | Lambda) || p(mu | Lambda)).
    const Vec2 delta = q.eta - prior.eta;
    const double quad = q.V.quadratic_form(delta);
    const Vec2 v_delta = vq * delta;
    grad.d_eta -= prior.beta * q.nu * v_delta;
    out.prior.d_eta += prior.beta * q.nu * v_delta;
    grad.d_beta -= 0.5 * kD * (1.0 / q.beta - prior.beta / (q.beta * q.beta));
    out.prior.d_beta -=
        0.5 * q.nu * quad + 0.5 * kD * (1.0 / q.beta - 1.0 / prior.beta);
    grad.d_V -= 0.5 * prior.beta * q.nu * outer(delta);
    grad.d_nu -= 0.5 * prior.beta * quad;

    // -KL(W(V_q, nu_q) || W(V_0, nu_0)).
    const double tr = (v0_inv_m * vq).trace();
    grad.d_V -= 0.5 * q.nu * v0_inv_m - 0.5 * prior.nu * vq_inv;
    grad.d_nu -= 0.5 * (tr - kD) + 0.25 * (q.nu - prior.nu) * trigamma_q;
    out.prior.d_V -= -0.5 * q.nu * v0_inv_m * vq * v0_inv_m +
                     0.5 * prior.nu * v0_inv_m;
    out.prior.d_nu -=
        -0.5 * (fq.log_det - log_det_v0) + 0.5 * psi_nu0 -
        0.5 * multivariate_digamma(0.5 * q.nu, kGoalDim);
  }
  return out;
}

double predictive_log_density(const Vec2& g_star, const MixturePosterior& mix,
                              std::span<const double> weights) {
  return PredictiveMixture(mix, weights).log_density(g_star);
}

PredictiveMixture::PredictiveMixture(const MixturePosterior& mix,
                                     std::span<const double> weights) {
  mix.validate();
  check_simplex(weights, mix.size(), "predictive weights");
  for (std::size_t c = 0; c < mix.size(); ++c) {
    if (weights[c] <= 0.0) continue;
    const StudentTParams t = posterior_predictive_params(mix.components[c]);
    const SpdFactorization f = spd_factorize(t.shape);
    components_.push_back(t);
    log_weights_.push_back(std::log(weights[c]));
    inverse_shapes_.push_back(f.inverse);
    log_norms_.push_back(log_gamma(0.5 * (t.df + kD)) - log_gamma(0.5 * t.df) -
                         0.5 * kD * std::log(t.df * std::numbers::pi) -
                         0.5 * f.log_det);
  }
}

double PredictiveMixture::log_density(const Vec2& x) const {
  double terms[64];
  std::vector<double> heap;
  double* out = terms;
  if (components_.size() > 64) {
    heap.resize(components_.size());
    out = heap.data();
  }
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const StudentTParams& t = components_[c];
    const double maha = inverse_shapes_[c].quadratic_form(x - t.loc);
    out[c] = log_weights_[c] + log_norms_[c] -
             0.5 * (t.df + kD) * std::log1p(maha / t.df);
  }
  return log_sum_exp(std::span<const double>(out, components_.size()));
}

double prior_log_evidence(const Vec2& g, const NormalWishartParams& prior,
                          std::span<const double> prior_pi) {
  const StudentTParams t = posterior_predictive_params(prior);
  const double total = std::accumulate(prior_pi.begin(), prior_pi.end(), 0.0);
  if (!(total > 0.0)) {
    throw DomainError("prior_log_evidence: prior_pi must have positive mass");
  }
  return student_t_log_density(g, t) + std::log(total);
}

}  // namespace gneva
