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


#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/LU>

#include "gneva/distributions.hpp"
#include "gneva/errors.hpp"
#include "gneva/verify/oracles.hpp"
#include "test_support.hpp"

namespace gneva {
namespace {

constexpr std::size_t kMcSamples = 1'000'000;

NormalWishartParams standard_params() {
  NormalWishartParams p;
  p.eta = Vec2::Zero();
  p.beta = 1.0;
  p.V = SPDMatrix2::identity();
  p.nu = 4.0;
  return p;
}

// Welford mean and standard error of a stream of draws.
struct Moments {
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double standard_error() const {
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

TEST(NormalWishartDensity, WishartPartMatchesIndependentFormula) {
  const WishartParams w{SPDMatrix2::identity().scaled(1.0 / 3.0), 3.0};
  const double value = wishart_log_density(SPDMatrix2::identity(), w);
  EXPECT_TRUE(std::isfinite(value));
  EXPECT_NEAR(value, verify::wishart_log_pdf(Mat2::Identity(), w.V.matrix(), 3.0), 1e-12);

  Rng rng(201);
  for (int i = 0; i < 50; ++i) {
    const SPDMatrix2 lambda = testing::random_spd(rng);
    const WishartParams r{testing::random_spd(rng), 1.5 + 5.0 * (i % 7)};
    EXPECT_NEAR(wishart_log_density(lambda, r),
                verify::wishart_log_pdf(lambda.matrix(), r.V.matrix(), r.nu), 1e-10);
  }
}

TEST(NormalWishartDensity, NormalPartAtMeanHasNoQuadraticTerm) {
  NormalWishartParams p = standard_params();
  p.eta = Vec2(1.5, -2.0);
  p.beta = 2.5;
  const SPDMatrix2 lambda(2.0, 0.3, 1.0);
  const double normal_part = normal_wishart_log_density(p.eta, lambda, p) -
                             wishart_log_density(lambda, {p.V, p.nu});
  const double expected =
      0.5 * std::log(lambda.scaled(p.beta).determinant()) - std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(normal_part, expected, 1e-12);
}

// The density integrated over a box of (mu, lambda) space must equal the
// probability of the box under an independent Bartlett sampler.
TEST(NormalWishartDensity, BoxMassMatchesSamplerFrequency) {
  NormalWishartParams p;
  p.eta = Vec2::Zero();
  p.beta = 2.0;
  p.V = SPDMatrix2::identity().scaled(0.5);
  p.nu = 4.0;
  const double lo[5] = {-1.0, -1.0, 0.5, -1.5, 0.5};
  const double hi[5] = {1.0, 1.0, 4.0, 1.5, 4.0};
  double volume = 1.0;
  for (int i = 0; i < 5; ++i) volume *= hi[i] - lo[i];

  Rng rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Moments integral;
  for (std::size_t s = 0; s < kMcSamples; ++s) {
    double x[5];
    for (int i = 0; i < 5; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
    double f = 0.0;
    if (is_positive_definite(x[2], x[3], x[4])) {
      f = std::exp(normal_wishart_log_density(Vec2(x[0], x[1]),
                                              SPDMatrix2(x[2], x[3], x[4]), p));
    }
    integral.add(volume * f);
  }

  Moments hits;
  for (std::size_t s = 0; s < kMcSamples; ++s) {
    const auto d = verify::draw_normal_wishart(p, rng);
    const double y[5] = {d.mean.x(), d.mean.y(), d.precision(0, 0), d.precision(0, 1),
                         d.precision(1, 1)};
    bool inside = true;
    for (int i = 0; i < 5; ++i) inside = inside && y[i] >= lo[i] && y[i] <= hi[i];
    hits.add(inside ? 1.0 : 0.0);
  }
  const double se = std::hypot(integral.standard_error(), hits.standard_error());
  EXPECT_LE(std::abs(integral.mean - hits.mean), 3.0 * se)
      << integral.mean << " vs " << hits.mean;
}

TEST(SampleNormalWishart, MomentsMatchParameters) {
  NormalWishartParams p;
  p.eta = Vec2(1.0, -2.0);
  p.beta = 1.5;
  p.V = SPDMatrix2(0.4, 0.1, 0.3);
  p.nu = 8.0;
  Rng rng(203);
  Moments l11, l12, l22, m1, m2, v1, v2;
  for (std::size_t s = 0; s < kMcSamples; ++s) {
    const auto d = sample_normal_wishart(p, rng);
    l11.add(d.lambda.a11());
    l12.add(d.lambda.a12());
    l22.add(d.lambda.a22());
    m1.add(d.mu.x());
    m2.add(d.mu.y());
    v1.add((d.mu.x() - p.eta.x()) * (d.mu.x() - p.eta.x()));
    v2.add((d.mu.y() - p.eta.y()) * (d.mu.y() - p.eta.y()));
  }
  const Mat2 mean_lambda = p.nu * p.V.matrix();
  EXPECT_LE(std::abs(l11.mean - mean_lambda(0, 0)), 3.0 * l11.standard_error());
  EXPECT_LE(std::abs(l12.mean - mean_lambda(0, 1)), 3.0 * l12.standard_error());
  EXPECT_LE(std::abs(l22.mean - mean_lambda(1, 1)), 3.0 * l22.standard_error());
  EXPECT_LE(std::abs(m1.mean - p.eta.x()), 3.0 * m1.standard_error());
  EXPECT_LE(std::abs(m2.mean - p.eta.y()), 3.0 * m2.standard_error());
  // E[(beta Lambda)^-1] = V^-1 / (beta (nu - D - 1)).
  const Mat2 cov = p.V.matrix().inverse() / (p.beta * (p.nu - 3.0));
  EXPECT_LE(std::abs(v1.mean - cov(0, 0)), 3.0 * v1.standard_error());
  EXPECT_LE(std::abs(v2.mean - cov(1, 1)), 3.0 * v2.standard_error());
}

TEST(SampleNormalWishart, DeterministicForFixedSeed) {
  const NormalWishartParams p = standard_params();
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const auto x = sample_normal_wishart(p, a);
    const auto y = sample_normal_wishart(p, b);
    EXPECT_EQ(x.mu, y.mu);
    EXPECT_EQ(x.lambda, y.lambda);
  }
}

TEST(ExpectedStats, PlugInValue) {
  const auto s = expected_stats(Vec2(1.0, 0.0), standard_params());
  EXPECT_NEAR(s.e_mahalanobis, 6.0, 1e-14);
  // psi_2(2) + 2 log 2 from mpmath.
  EXPECT_NEAR(s.e_log_det, 1.84556867019693428, 1e-12);
}

TEST(ExpectedStats, MatchesMonteCarlo) {
  Rng rng(204);
  const NormalWishartParams q = standard_params();
  const Vec2 g(1.0, 0.0);
  const auto s = expected_stats(g, q);
  const auto mc = verify::mc_expected_stats(g, q, kMcSamples, rng);
  EXPECT_LE(mc.e_mahalanobis.z_score(s.e_mahalanobis), 3.0);
  EXPECT_LE(mc.e_log_det.z_score(s.e_log_det), 3.0);
}

TEST(ExpectedStats, QuadraticTermVanishesAsBetaGrows) {
  NormalWishartParams q = standard_params();
  q.eta = Vec2(2.0, 3.0);
  double previous = std::numeric_limits<double>::infinity();
  for (double beta : {1.0, 1e2, 1e4, 1e8}) {
    q.beta = beta;
    const double m = expected_stats(q.eta, q).e_mahalanobis;
    EXPECT_LT(m, previous);
    previous = m;
  }
  EXPECT_LT(previous, 1e-7);
}

TEST(KlMeanGivenPrecision, ZeroCases) {
  Rng rng(205);
  const NormalWishartParams p = testing::random_normal_wishart(rng);
  EXPECT_EQ(kl_mean_given_precision(p, p), 0.0);
  NormalWishartParams q = testing::random_normal_wishart(rng);
  q.eta = p.eta;
  q.beta = p.beta;
  EXPECT_NEAR(kl_mean_given_precision(q, p), 0.0, 1e-15);
}

TEST(KlWishart, ZeroAndSecondOrderNearMinimum) {
  const WishartParams p{SPDMatrix2(0.5, 0.1, 0.3), 5.0};
  EXPECT_NEAR(kl_wishart(p, p), 0.0, 1e-12);
  const WishartParams q{p.V, p.nu + 1e-3};
  const double kl = kl_wishart(q, p);
  EXPECT_GT(kl, 0.0);
  EXPECT_LT(kl, 1e-5);
}

TEST(KullbackLeibler, NonNegativeOnRandomPairs) {
  Rng rng(206);
  for (int i = 0; i < 1000; ++i) {
    const auto q = testing::random_normal_wishart(rng, 1.2);
    const auto p = testing::random_normal_wishart(rng, 1.2);
    EXPECT_GT(kl_mean_given_precision(q, p), 0.0);
    EXPECT_GT(kl_wishart({q.V, q.nu}, {p.V, p.nu}), 0.0);
    EXPECT_NEAR(kl_mean_given_precision(q, q), 0.0, 1e-12);
    EXPECT_NEAR(kl_wishart({q.V, q.nu}, {q.V, q.nu}), 0.0, 1e-12);
  }
}

TEST(KullbackLeibler, ClosedFormsMatchMonteCarlo) {
  Rng rng(207);
  for (int i = 0; i < 2; ++i) {
    const auto q = testing::random_normal_wishart(rng);
    const auto p = testing::random_normal_wishart(rng);
    const auto mean_mc = verify::mc_kl_mean_given_precision(q, p, kMcSamples, rng);
    EXPECT_LE(mean_mc.z_score(kl_mean_given_precision(q, p)), 3.0);
    const auto wish_mc = verify::mc_kl_wishart({q.V, q.nu}, {p.V, p.nu}, kMcSamples, rng);
    EXPECT_LE(wish_mc.z_score(kl_wishart({q.V, q.nu}, {p.V, p.nu})), 3.0);
  }
}

TEST(StudentT, CauchyPeak) {
  const StudentTParams t{Vec2(3.0, -1.0), SPDMatrix2::identity(), 1.0};
  EXPECT_NEAR(student_t_log_density(t.loc, t), -1.83787706640934548, 1e-13);
}

TEST(StudentT, LargeDfApproachesGaussian) {
  const StudentTParams t{Vec2::Zero(), SPDMatrix2::identity(), 1e6};
  const Vec2 x(1.0, 1.0);
  const double gauss = verify::gaussian_log_pdf(x, Vec2::Zero(), Mat2::Identity());
  EXPECT_NEAR(std::exp(student_t_log_density(x, t)), std::exp(gauss), 1e-3);
  EXPECT_NEAR(student_t_log_density(x, t), gauss, 1e-5);
}

TEST(StudentT, EllipticalSymmetryAndMode) {
  Rng rng(208);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const StudentTParams t{Vec2(n(rng), n(rng)), testing::random_spd(rng), 2.5 + i % 5};
    const Vec2 d(n(rng), n(rng));
    EXPECT_NEAR(student_t_log_density(t.loc + d, t), student_t_log_density(t.loc - d, t),
                1e-12);
  }
}

TEST(PosteriorPredictive, DirectSubstitution) {
  const auto t = posterior_predictive_params(standard_params());
  EXPECT_EQ(t.loc, Vec2::Zero());
  EXPECT_EQ(t.df, 3.0);
  EXPECT_NEAR(t.shape.a11(), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(t.shape.a12(), 0.0, 1e-15);
  EXPECT_NEAR(t.shape.a22(), 2.0 / 3.0, 1e-15);
}

TEST(PosteriorPredictive, LargeBetaLimit) {
  NormalWishartParams q = standard_params();
  q.V = SPDMatrix2(0.5, 0.2, 0.8);
  q.nu = 6.0;
  q.beta = 1e12;
  const auto t = posterior_predictive_params(q);
  const Mat2 limit = q.V.matrix().inverse() / (q.nu - 1.0);
  EXPECT_TRUE(t.shape.matrix().isApprox(limit, 1e-10));
}

TEST(PosteriorPredictive, RequiresNuAboveThree) {
  NormalWishartParams q = standard_params();
  q.nu = 3.0;
  EXPECT_THROW(posterior_predictive_params(q), DegreesOfFreedomTooSmall);
  q.nu = 2.5;
  EXPECT_THROW(posterior_predictive_params(q), DegreesOfFreedomTooSmall);
}

TEST(PosteriorPredictive, IntegratesToOne) {
  Rng rng(209);
  for (int i = 0; i < 3; ++i) {
    const auto q = testing::random_normal_wishart(rng);
    const auto t = posterior_predictive_params(q);
    const Vec2 half(40.0 * std::sqrt(t.shape.a11()), 40.0 * std::sqrt(t.shape.a22()));
    const double mass = verify::trapezoid_2d(
        [&](const Vec2& x) { return std::exp(student_t_log_density(x, t)); }, t.loc - half,
        t.loc + half, 200);
    EXPECT_NEAR(mass, 1.0, 1e-2);
  }
}

TEST(PosteriorPredictive, MaximizedAtLocation) {
  Rng rng(210);
  const auto q = testing::random_normal_wishart(rng);
  const auto t = posterior_predictive_params(q);
  const double peak = student_t_log_density(q.eta, t);
  for (int k = 0; k < 8; ++k) {
    const double angle = k * std::numbers::pi / 4.0;
    const Vec2 x = q.eta + 0.05 * Vec2(std::cos(angle), std::sin(angle));
    EXPECT_LT(student_t_log_density(x, t), peak);
  }
}

TEST(ConjugateUpdate, MatchesClosedForm) {
  NormalWishartParams prior = standard_params();
  prior.eta = Vec2(1.0, 2.0);
  prior.beta = 0.5;
  prior.V = SPDMatrix2(0.3, 0.05, 0.2);
  const Vec2 g(-1.0, 4.0);
  const auto post = conjugate_update(prior, g);
  EXPECT_NEAR(post.beta, 1.5, 1e-15);
  EXPECT_NEAR(post.nu, 5.0, 1e-15);
  EXPECT_TRUE(post.eta.isApprox((0.5 * prior.eta + g) / 1.5, 1e-14));
  const Vec2 d = g - prior.eta;
  const Mat2 v_inv = prior.V.matrix().inverse() + (0.5 / 1.5) * d * d.transpose();
  EXPECT_TRUE(post.V.matrix().isApprox(v_inv.inverse(), 1e-12));
}

TEST(NormalWishartParams, ValidateRejectsBadValues) {
  NormalWishartParams p = standard_params();
  EXPECT_NO_THROW(p.validate());
  p.beta = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = standard_params();
  p.nu = 1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = standard_params();
  p.eta.x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(p.validate(), DomainError);
}

}  // namespace
}  // namespace gneva
