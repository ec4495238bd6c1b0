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


#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <Eigen/LU>

#include "gneva/errors.hpp"
#include "gneva/mixture.hpp"
#include "gneva/verify/oracles.hpp"
#include "test_support.hpp"

namespace gneva {
namespace {

NormalWishartParams component(Vec2 eta, double beta, double v, double nu) {
  NormalWishartParams p;
  p.eta = eta;
  p.beta = beta;
  p.V = SPDMatrix2::identity().scaled(v);
  p.nu = nu;
  return p;
}

TEST(ZPosterior, SingleComponentTakesAllMass) {
  Rng rng(301);
  const auto mix = testing::random_mixture(rng, 1);
  const auto r = z_posterior(Vec2(0.3, -7.0), mix);
  ASSERT_EQ(r.q_z.size(), 1u);
  EXPECT_EQ(r.q_z[0], 1.0);
}

TEST(ZPosterior, MirrorSymmetricComponentsSplitEvenly) {
  const Vec2 g(1.0, 2.0);
  const Vec2 offset(0.7, -1.3);
  const auto mix = MixturePosterior::with_uniform_weights(
      {component(g + offset, 2.0, 0.4, 5.0), component(g - offset, 2.0, 0.4, 5.0)});
  const auto r = z_posterior(g, mix);
  EXPECT_NEAR(r.q_z[0], 0.5, 1e-14);
  EXPECT_NEAR(r.q_z[1], 0.5, 1e-14);
}

TEST(ZPosterior, MatchesMonteCarloExpectedLogEmission) {
  Rng rng(302);
  const auto mix = testing::random_mixture(rng, 3);
  const Vec2 g(0.5, -0.5);
  std::vector<double> logits;
  for (std::size_t c = 0; c < mix.size(); ++c) {
    const auto mc = verify::mc_expected_stats(g, mix.components[c], 1'000'000, rng);
    logits.push_back(mix.log_pi[c] + 0.5 * mc.e_log_det.mean -
                     std::log(2.0 * std::numbers::pi) - 0.5 * mc.e_mahalanobis.mean);
  }
  const double norm = log_sum_exp(logits);
  const auto r = z_posterior(g, mix);
  double tv = 0.0;
  for (std::size_t c = 0; c < mix.size(); ++c) {
    tv += 0.5 * std::abs(r.q_z[c] - std::exp(logits[c] - norm));
  }
  EXPECT_LT(tv, 1e-2);
}

TEST(ZPosterior, SumsToOneAndPermutesWithComponents) {
  Rng rng(303);
  for (int i = 0; i < 100; ++i) {
    auto mix = testing::random_mixture(rng, 4);
    const Vec2 g(3.0 * std::sin(i), 3.0 * std::cos(i));
    const auto r = z_posterior(g, mix);
    double sum = 0.0;
    for (double q : r.q_z) {
      EXPECT_GE(q, 0.0);
      sum += q;
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);

    std::vector<int> perm{2, 0, 3, 1};
    MixturePosterior permuted = mix;
    for (int c = 0; c < 4; ++c) permuted.components[c] = mix.components[perm[c]];
    const auto rp = z_posterior(g, permuted);
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(rp.q_z[c], r.q_z[perm[c]], 1e-14);
  }
}

TEST(ZPosterior, LargerNuPenalizesDistantComponent) {
  const Vec2 g(0.0, 0.0);
  double previous = 1.0;
  for (double nu : {4.0, 6.0, 10.0, 20.0}) {
    const auto mix = MixturePosterior::with_uniform_weights(
        {component(Vec2(6.0, 0.0), 1.0, 0.5, nu), component(Vec2(0.0, 1.0), 1.0, 0.5, 5.0)});
    const double q = z_posterior(g, mix).q_z[0];
    EXPECT_LT(q, previous) << "nu = " << nu;
    previous = q;
  }
}

TEST(Elbo, BoundedByLogEvidence) {
  Rng rng(304);
  std::uniform_int_distribution<int> count(1, 6);
  for (int i = 0; i < 100; ++i) {
    const int c = count(rng);
    const auto mix = testing::random_mixture(rng, c);
    const auto prior = testing::random_normal_wishart(rng);
    const auto pi = uniform_weights(c);
    const Vec2 g(4.0 * std::sin(3.0 * i), 4.0 * std::cos(5.0 * i));
    EXPECT_LE(elbo(g, mix, prior, pi) - prior_log_evidence(g, prior, pi), 1e-9);
  }
}

TEST(Elbo, TightAtExactConjugatePosterior) {
  Rng rng(305);
  for (int i = 0; i < 20; ++i) {
    const auto prior = testing::random_normal_wishart(rng);
    const Vec2 g(2.0 * std::sin(i), 1.0 + std::cos(i));
    // Written out here rather than calling conjugate_update.
    NormalWishartParams post;
    post.beta = prior.beta + 1.0;
    post.nu = prior.nu + 1.0;
    post.eta = (prior.beta * prior.eta + g) / post.beta;
    const Vec2 d = g - prior.eta;
    const Mat2 v_inv =
        prior.V.matrix().inverse() + (prior.beta / post.beta) * d * d.transpose();
    post.V = SPDMatrix2::from_matrix(v_inv.inverse());
    const auto mix = MixturePosterior::with_uniform_weights({post});
    const auto pi = uniform_weights(1);
    EXPECT_NEAR(elbo(g, mix, prior, pi), prior_log_evidence(g, prior, pi), 1e-8);
  }
}

TEST(Elbo, InvariantToComponentPermutation) {
  Rng rng(306);
  const auto mix = testing::random_mixture(rng, 3);
  const auto prior = testing::random_normal_wishart(rng);
  const Vec2 g(1.0, 1.0);
  MixturePosterior permuted = mix;
  std::reverse(permuted.components.begin(), permuted.components.end());
  std::vector<double> pi{0.2, 0.3, 0.5};
  std::vector<double> pi_reversed{0.5, 0.3, 0.2};
  EXPECT_NEAR(elbo(g, mix, prior, pi), elbo(g, permuted, prior, pi_reversed), 1e-12);
}

TEST(ElboGradient, MatchesCentralDifferences) {
  Rng rng(307);
  const auto mix = testing::random_mixture(rng, 3);
  const auto prior = testing::random_normal_wishart(rng);
  const auto pi = uniform_weights(3);
  const Vec2 g(0.5, 1.5);
  const auto grad = elbo_gradient(g, mix, prior, pi);
  EXPECT_NEAR(grad.terms.value(), elbo(g, mix, prior, pi), 1e-12);

  const double h = 1e-6;
  auto diff = [&](auto&& perturb) {
    MixturePosterior up = mix, down = mix;
    NormalWishartParams prior_up = prior, prior_down = prior;
    perturb(up, prior_up, h);
    perturb(down, prior_down, -h);
    return (elbo(g, up, prior_up, pi) - elbo(g, down, prior_down, pi)) / (2 * h);
  };
  auto shift_v = [](SPDMatrix2& v, int entry, double step) {
    double a11 = v.a11(), a12 = v.a12(), a22 = v.a22();
    (entry == 0 ? a11 : entry == 1 ? a12 : a22) += step;
    v = SPDMatrix2(a11, a12, a22);
  };
  // Directional derivative of a symmetric perturbation E against dV.
  auto along = [](const Mat2& d, int entry) {
    return entry == 0 ? d(0, 0) : entry == 1 ? d(0, 1) + d(1, 0) : d(1, 1);
  };

  for (int c = 0; c < 3; ++c) {
    const auto& gc = grad.components[c];
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(gc.d_eta[k],
                  diff([&](auto& m, auto&, double s) { m.components[c].eta[k] += s; }), 1e-6);
    }
    EXPECT_NEAR(gc.d_beta, diff([&](auto& m, auto&, double s) { m.components[c].beta += s; }),
                1e-6);
    EXPECT_NEAR(gc.d_nu, diff([&](auto& m, auto&, double s) { m.components[c].nu += s; }),
                1e-6);
    for (int e = 0; e < 3; ++e) {
      EXPECT_NEAR(along(gc.d_V, e),
                  diff([&](auto& m, auto&, double s) { shift_v(m.components[c].V, e, s); }),
                  1e-5);
    }
  }
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(grad.prior.d_eta[k], diff([&](auto&, auto& p, double s) { p.eta[k] += s; }),
                1e-6);
  }
  EXPECT_NEAR(grad.prior.d_beta, diff([&](auto&, auto& p, double s) { p.beta += s; }), 1e-6);
  EXPECT_NEAR(grad.prior.d_nu, diff([&](auto&, auto& p, double s) { p.nu += s; }), 1e-6);
  for (int e = 0; e < 3; ++e) {
    EXPECT_NEAR(along(grad.prior.d_V, e),
                diff([&](auto&, auto& p, double s) { shift_v(p.V, e, s); }), 1e-5);
  }
}

TEST(PredictiveLogDensity, DegenerateMixtures) {
  Rng rng(308);
  const auto mix = testing::random_mixture(rng, 4);
  const Vec2 x(0.2, 0.9);
  const std::vector<double> first{1.0, 0.0, 0.0, 0.0};
  EXPECT_NEAR(predictive_log_density(x, mix, first),
              student_t_log_density(x, posterior_predictive_params(mix.components[0])),
              1e-12);
  const auto single = MixturePosterior::with_uniform_weights({mix.components[2]});
  const std::vector<double> one{1.0};
  EXPECT_NEAR(predictive_log_density(x, single, one),
              student_t_log_density(x, posterior_predictive_params(mix.components[2])),
              1e-12);
}

TEST(PredictiveLogDensity, ClassMatchesFreeFunction) {
  Rng rng(309);
  const auto mix = testing::random_mixture(rng, 5);
  const std::vector<double> w{0.1, 0.2, 0.3, 0.15, 0.25};
  const PredictiveMixture pm(mix, w);
  for (int i = 0; i < 50; ++i) {
    const Vec2 x(5.0 * std::sin(i), 5.0 * std::cos(2.0 * i));
    EXPECT_NEAR(pm.log_density(x), predictive_log_density(x, mix, w), 1e-12);
  }
}

TEST(PredictiveLogDensity, IntegratesToOne) {
  Rng rng(310);
  const auto mix = testing::random_mixture(rng, 3);
  const std::vector<double> w{0.5, 0.3, 0.2};
  const PredictiveMixture pm(mix, w);
  double scale = 0.0;
  for (const auto& t : pm.components()) scale = std::max(scale, std::sqrt(t.shape.trace()));
  const Vec2 half(40.0 * scale, 40.0 * scale);
  const double mass = verify::trapezoid_2d([&](const Vec2& x) { return std::exp(pm.log_density(x)); },
                                           -half, half, 400);
  EXPECT_NEAR(mass, 1.0, 1e-2);
}

TEST(PredictiveLogDensity, LipschitzContinuous) {
  Rng rng(311);
  const auto mix = testing::random_mixture(rng, 6);
  const auto w = uniform_weights(6);
  const double delta = 1e-6;
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(6.0 * std::sin(0.7 * i), 6.0 * std::cos(1.3 * i));
    const Vec2 step = delta * Vec2(std::cos(i), std::sin(i));
    const double lip = std::abs(predictive_log_density(x, mix, w) -
                                predictive_log_density(x + step, mix, w)) / delta;
    EXPECT_LT(lip, 1e6);
  }
}

TEST(PriorLogEvidence, UniformWeightsCancel) {
  Rng rng(312);
  const auto prior = testing::random_normal_wishart(rng);
  const Vec2 g(1.0, -2.0);
  const double single = student_t_log_density(g, posterior_predictive_params(prior));
  EXPECT_NEAR(prior_log_evidence(g, prior, uniform_weights(6)), single, 1e-12);
  EXPECT_NEAR(prior_log_evidence(g, prior, uniform_weights(1)), single, 1e-12);
}

TEST(PriorLogEvidence, PeaksAtPriorMean) {
  Rng rng(313);
  const auto prior = testing::random_normal_wishart(rng);
  const auto pi = uniform_weights(2);
  const double peak = prior_log_evidence(prior.eta, prior, pi);
  for (double radius : {0.1, 1.0, 5.0}) {
    EXPECT_LT(prior_log_evidence(prior.eta + Vec2(radius, 0.0), prior, pi), peak);
  }
}

TEST(PriorLogEvidence, MatchesMonteCarloMarginal) {
  Rng rng(314);
  const auto prior = testing::random_normal_wishart(rng);
  const Vec2 g = prior.eta + Vec2(0.4, -0.3);
  const auto mc = verify::mc_prior_log_evidence(g, prior, 1'000'000, rng);
  EXPECT_LE(mc.z_score(prior_log_evidence(g, prior, uniform_weights(3))), 3.0);
}

TEST(PriorLogEvidence, RequiresPredictiveDegreesOfFreedom) {
  NormalWishartParams prior;
  prior.nu = 2.5;
  EXPECT_THROW(prior_log_evidence(Vec2::Zero(), prior, uniform_weights(1)),
               DegreesOfFreedomTooSmall);
}

TEST(MixturePosterior, ValidateCatchesBadWeights) {
  Rng rng(315);
  auto mix = testing::random_mixture(rng, 2);
  EXPECT_NO_THROW(mix.validate());
  mix.log_pi = {std::log(0.5), std::log(0.6)};
  EXPECT_THROW(mix.validate(), DomainError);
  MixturePosterior empty;
  EXPECT_THROW(empty.validate(), DomainError);
}

}  // namespace
}  // namespace gneva
