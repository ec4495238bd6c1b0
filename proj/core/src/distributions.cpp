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

#include "gneva/distributions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gneva/errors.hpp"

namespace gneva {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLog2 = std::numbers::ln2;
constexpr double kD = static_cast<double>(kGoalDim);

// trace(A^-1 B) for SPD A, B.
double trace_inverse_product(const SPDMatrix2& a, const SPDMatrix2& b) {
  const SPDMatrix2 inv = spd_factorize(a).inverse;
  return inv.a11() * b.a11() + 2.0 * inv.a12() * b.a12() + inv.a22() * b.a22();
}

}  // namespace

void NormalWishartParams::validate() const {
  if (!std::isfinite(eta.x()) || !std::isfinite(eta.y())) {
    throw DomainError("NormalWishartParams: eta must be finite");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("NormalWishartParams: beta must be positive, got " +
                      std::to_string(beta));
  }
  if (!(nu > kD - 1.0) || !std::isfinite(nu)) {
    throw DomainError("NormalWishartParams: nu must exceed D-1, got " +
                      std::to_string(nu));
  }
}

double gaussian_log_density(const Vec2& x, const Gaussian2& g) {
  const double log_det = spd_factorize(g.precision).log_det;
  return 0.5 * log_det - 0.5 * kD * kLog2Pi -
         0.5 * g.precision.quadratic_form(x - g.mean);
}

double wishart_log_density(const SPDMatrix2& lambda, const WishartParams& w) {
  if (!(w.nu > kD - 1.0)) {
    throw DomainError("wishart_log_density: nu must exceed D-1");
  }
  const double log_det_lambda = spd_factorize(lambda).log_det;
  const double log_det_v = spd_factorize(w.V).log_det;
  return 0.5 * (w.nu - kD - 1.0) * log_det_lambda -
         0.5 * trace_inverse_product(w.V, lambda) - 0.5 * w.nu * kD * kLog2 -
         log_multivariate_gamma(0.5 * w.nu, kGoalDim) - 0.5 * w.nu * log_det_v;
}

double normal_wishart_log_density(const Vec2& mu, const SPDMatrix2& lambda,
                                  const NormalWishartParams& params) {
  params.validate();
  const double log_det_lambda = spd_factorize(lambda).log_det;
  const double normal_part =
      0.5 * kD * std::log(params.beta) + 0.5 * log_det_lambda -
      0.5 * kD * kLog2Pi -
      0.5 * params.beta * lambda.quadratic_form(mu - params.eta);
  return normal_part + wishart_log_density(lambda, {params.V, params.nu});
}

SPDMatrix2 sample_wishart(const WishartParams& w, Rng& rng) {
  if (!(w.nu > kD - 1.0)) {
    throw DomainError("sample_wishart: nu must exceed D-1");
  }
  // chi^2(k) = Gamma(k / 2, scale 2)
  std::gamma_distribution<double> chi2_first(0.5 * w.nu, 2.0);
  std::gamma_distribution<double> chi2_second(0.5 * (w.nu - 1.0), 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a11 = std::sqrt(chi2_first(rng));
  const double a21 = normal(rng);
  const double a22 = std::sqrt(chi2_second(rng));
  const Cholesky2& l = w.V.cholesky();
  // B = L A is lower triangular; Lambda = B B^T.
  Cholesky2 b;
  b.l11 = l.l11 * a11;
  b.l21 = l.l21 * a11 + l.l22 * a21;
  b.l22 = l.l22 * a22;
  return SPDMatrix2::from_cholesky(b);
}

NormalWishartSample sample_normal_wishart(const NormalWishartParams& params,
                                          Rng& rng) {
  params.validate();
  NormalWishartSample s;
  s.lambda = sample_wishart({params.V, params.nu}, rng);
  // mu = eta + (beta Lambda)^{-1/2} z, using the inverse transpose of the
  // Cholesky factor of beta Lambda.
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  const Cholesky2& c = s.lambda.cholesky();
  const double scale = 1.0 / std::sqrt(params.beta);
  // Solve L^T x = z.
  const double x2 = z2 / c.l22;
  const double x1 = (z1 - c.l21 * x2) / c.l11;
  s.mu = params.eta + scale * Vec2(x1, x2);
  return s;
}

ExpectedStats expected_stats(const Vec2& g, const NormalWishartParams& q) {
  q.validate();
  ExpectedStats s;
  s.e_log_det = spd_factorize(q.V).log_det +
                multivariate_digamma(0.5 * q.nu, kGoalDim) + kD * kLog2;
  s.e_mahalanobis = q.nu * q.V.quadratic_form(g - q.eta) + kD / q.beta;
  return s;
}

double kl_mean_given_precision(const NormalWishartParams& q,
                               const NormalWishartParams& p) {
  q.validate();
  p.validate();
  const double ratio = p.beta / q.beta;
  return 0.5 * p.beta * q.nu * q.V.quadratic_form(q.eta - p.eta) +
         0.5 * kD * (ratio - std::log(ratio) - 1.0);
}

double kl_wishart(const WishartParams& q, const WishartParams& p) {
  const double log_det_ratio =
      spd_factorize(q.V).log_det - spd_factorize(p.V).log_det;
  return 0.5 * q.nu * (trace_inverse_product(p.V, q.V) - kD) -
         0.5 * p.nu * log_det_ratio +
         log_multivariate_gamma(0.5 * p.nu, kGoalDim) -
         log_multivariate_gamma(0.5 * q.nu, kGoalDim) +
         0.5 * (q.nu - p.nu) * multivariate_digamma(0.5 * q.nu, kGoalDim);
}

double student_t_log_density(const Vec2& x, const StudentTParams& t) {
  const SpdFactorization f = spd_factorize(t.shape);
  const double maha = f.inverse.quadratic_form(x - t.loc);
  return log_gamma(0.5 * (t.df + kD)) - log_gamma(0.5 * t.df) -
         0.5 * kD * std::log(t.df * std::numbers::pi) - 0.5 * f.log_det -
         0.5 * (t.df + kD) * std::log1p(maha / t.df);
}

Vec2 sample_student_t(const StudentTParams& t, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(t.df);
  const Vec2 z(normal(rng), normal(rng));
  const double w = chi2(rng) / t.df;
  return t.loc + t.shape.cholesky().apply(z) / std::sqrt(w);
}

StudentTParams posterior_predictive_params(const NormalWishartParams& q) {
  q.validate();
  if (!(q.nu > 3.0)) {
    throw DegreesOfFreedomTooSmall(
        "posterior predictive requires nu > 3, got " + std::to_string(q.nu));
  }
  StudentTParams t;
  t.loc = q.eta;
  t.df = q.nu - 1.0;
  const double factor = (q.beta + 1.0) / (q.beta * (q.nu - 1.0));
  t.shape = spd_factorize(q.V).inverse.scaled(factor);
  return t;
}

NormalWishartParams conjugate_update(const NormalWishartParams& prior,
                                     const Vec2& g) {
  prior.validate();
  NormalWishartParams post;
  post.beta = prior.beta + 1.0;
  post.nu = prior.nu + 1.0;
  post.eta = (prior.beta * prior.eta + g) / post.beta;
  const Vec2 d = g - prior.eta;
  const double w = prior.beta / post.beta;
  const SPDMatrix2 v_inv = spd_factorize(prior.V).inverse;
  const SPDMatrix2 updated(v_inv.a11() + w * d.x() * d.x(),
                           v_inv.a12() + w * d.x() * d.y(),
                           v_inv.a22() + w * d.y() * d.y());
  post.V = spd_factorize(updated).inverse;
  return post;
}

}  // namespace gneva
