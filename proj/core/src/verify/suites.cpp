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


#include "gneva/verify/suites.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "gneva/distributions.hpp"
#include "gneva/encoders.hpp"
#include "gneva/mixture.hpp"
#include "gneva/sampling.hpp"
#include "gneva/synth.hpp"
#include "gneva/training.hpp"
#include "gneva/verify/oracles.hpp"
#include "gneva/verify/reference_loss.hpp"

namespace gneva::verify {
namespace {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

SPDMatrix2 random_spd(Rng& rng, double lo, double hi) {
  const double angle = uniform(rng, 0.0, std::numbers::pi);
  Mat2 rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  const Mat2 m = rot * Vec2(uniform(rng, lo, hi), uniform(rng, lo, hi)).asDiagonal() *
                 rot.transpose();
  return SPDMatrix2::from_matrix(0.5 * (m + m.transpose()));
}

NormalWishartParams random_normal_wishart(Rng& rng) {
  NormalWishartParams p;
  p.eta = Vec2(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0));
  p.beta = uniform(rng, 0.5, 3.0);
  p.V = random_spd(rng, 0.2, 2.0);
  p.nu = uniform(rng, 4.0, 10.0);
  return p;
}

std::vector<double> random_simplex(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& x : w) {
    x = -std::log(uniform(rng, 1e-12, 1.0));
    sum += x;
  }
  for (double& x : w) x /= sum;
  return w;
}

// Single-observation conjugate update, written out from the Normal-Wishart
// posterior rather than taken from the library.
NormalWishartParams exact_posterior(const NormalWishartParams& prior, const Vec2& g) {
  NormalWishartParams q;
  q.beta = prior.beta + 1.0;
  q.nu = prior.nu + 1.0;
  q.eta = (prior.beta * prior.eta + g) / q.beta;
  const Vec2 d = g - prior.eta;
  const Mat2 inv = prior.V.matrix().inverse() +
                   (prior.beta / q.beta) * d * d.transpose();
  const Mat2 v = inv.inverse();
  q.V = SPDMatrix2::from_matrix(0.5 * (v + v.transpose()));
  return q;
}

class WorstZ {
 public:
  void observe(const std::string& what, const McEstimate& mc, double closed) {
    const double z = mc.z_score(closed);
    if (z > z_) {
      z_ = z;
      where_ = what;
    }
  }
  double z() const { return z_; }
  const std::string& where() const { return where_; }

 private:
  double z_ = 0.0;
  std::string where_ = "-";
};

}  // namespace

SuiteResult closed_form_vs_mc(const McSuiteOptions& opt) {
  Rng rng(opt.seed);
  WorstZ worst;
  int violations = 0;
  auto check = [&](const std::string& what, const McEstimate& mc, double closed) {
    worst.observe(what, mc, closed);
    if (mc.z_score(closed) > opt.max_z) ++violations;
  };
  for (int i = 0; i < opt.pairs; ++i) {
    const NormalWishartParams q = random_normal_wishart(rng);
    const NormalWishartParams p = random_normal_wishart(rng);
    const Vec2 g(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
    const std::string tag = "#" + std::to_string(i);
    check("kl_mean " + tag, mc_kl_mean_given_precision(q, p, opt.samples, rng),
          kl_mean_given_precision(q, p));
    check("kl_wishart " + tag, mc_kl_wishart({q.V, q.nu}, {p.V, p.nu}, opt.samples, rng),
          kl_wishart({q.V, q.nu}, {p.V, p.nu}));
    const McExpectedStats mc = mc_expected_stats(g, q, opt.samples, rng);
    const ExpectedStats closed = expected_stats(g, q);
    check("e_log_det " + tag, mc.e_log_det, closed.e_log_det);
    check("e_mahalanobis " + tag, mc.e_mahalanobis, closed.e_mahalanobis);
    const std::vector<double> pi = uniform_weights(3);
    check("prior_log_evidence " + tag, mc_prior_log_evidence(g, p, opt.samples, rng),
          prior_log_evidence(g, p, pi));
  }
  std::ostringstream detail;
  detail << opt.pairs << " pairs x 5 quantities, " << opt.samples
         << " samples; worst " << worst.z() << " SE (" << worst.where() << "), "
         << violations << " above " << opt.max_z;
  return {"closed-form vs Monte-Carlo", violations == 0, detail.str()};
}

SuiteResult elbo_bound(const ElboSuiteOptions& opt) {
  Rng rng(opt.seed);
  double min_slack = INFINITY;
  double max_gap = 0.0;
  int violations = 0;
  for (int i = 0; i < opt.instances; ++i) {
    const NormalWishartParams prior = random_normal_wishart(rng);
    const Vec2 g(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
    const std::size_t C = 1 + static_cast<std::size_t>(rng() % 6);
    std::vector<NormalWishartParams> comps;
    for (std::size_t c = 0; c < C; ++c) comps.push_back(random_normal_wishart(rng));
    MixturePosterior mix;
    mix.components = comps;
    for (double w : random_simplex(rng, C)) mix.log_pi.push_back(std::log(w));
    const std::vector<double> prior_pi = random_simplex(rng, C);
    const double slack =
        prior_log_evidence(g, prior, prior_pi) - elbo(g, mix, prior, prior_pi);
    min_slack = std::min(min_slack, slack);
    if (slack < -opt.bound_slack) ++violations;

    const MixturePosterior exact =
        MixturePosterior::with_uniform_weights({exact_posterior(prior, g)});
    const std::vector<double> one{1.0};
    const double gap =
        std::abs(elbo(g, exact, prior, one) - prior_log_evidence(g, prior, one));
    max_gap = std::max(max_gap, gap);
    if (gap > opt.tight_tolerance) ++violations;
  }
  std::ostringstream detail;
  detail << opt.instances << " instances; min slack " << min_slack
         << ", max |ELBO - log p(g)| at exact posterior " << max_gap;
  return {"ELBO bound", violations == 0, detail.str()};
}

SuiteResult spatial_gradient(const GradientSuiteOptions& opt) {
  EncoderConfig cfg;
  SynthConfig sc;
  sc.n = 1;
  sc.seed = opt.seed;
  sc.T = cfg.future_steps;
  const Scenario scene = synth_generate(sc, SceneKind::kTurn).front();
  ParamTape tape(opt.seed);
  const SpatialModel model(tape, cfg);
  const SpatialExample ex = make_spatial_example(scene, cfg);

  // The cross-entropy target is a stop-gradient quantity, so it is frozen at
  // the base point for both the analytic and the numeric derivative.
  const std::vector<double> target = spatial_responsibilities(model, tape, ex);
  const double production = spatial_loss(model, tape, ex, 1.0, nullptr, target).loss;
  const long double base =
      reference_spatial_loss(cfg, tape, ex.scene, ex.goal, 1.0, target).loss;
  const double forward_gap = std::abs(static_cast<double>(base - production));

  const LossFn loss = [&](const ParamTape& t, GradBuffer* grads) -> double {
    if (grads) return spatial_loss(model, t, ex, 1.0, grads, target).loss;
    return static_cast<double>(
        reference_spatial_loss(cfg, t, ex.scene, ex.goal, 1.0, target).loss - base);
  };
  const GradientReport report =
      check_gradients(tape, loss, opt.tolerance, opt.parameters, opt.seed);

  std::ostringstream detail;
  detail << report.checked << " of " << tape.size() << " parameters; max rel err "
         << report.max_relative_error << " (analytic " << report.worst_analytic
         << ", numeric " << report.worst_numeric << "); forward gap " << forward_gap;
  const bool passed = report.passed && report.checked >= opt.parameters &&
                      forward_gap <= opt.forward_tolerance * std::abs(production);
  return {"spatial loss gradient", passed, detail.str()};
}

SuiteResult nms_equivalence(const NmsSuiteOptions& opt) {
  Rng rng(opt.seed);
  int mismatches = 0;
  int overlaps = 0;
  for (int p = 0; p < opt.pools; ++p) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng() % opt.max_pool);
    // Every fourth pool uses coarse scores so ties are exercised.
    const bool coarse = p % 4 == 0;
    std::vector<ScoredCandidate> pool(n);
    for (auto& c : pool) {
      c.location = Vec2(uniform(rng, -10.0, 10.0), uniform(rng, -10.0, 10.0));
      c.log_prob = coarse ? std::floor(uniform(rng, -4.0, 0.0)) : uniform(rng, -10.0, 0.0);
    }
    NmsConfig cfg;
    if (p % 2 == 1) {
      cfg.radius = uniform(rng, 0.5, 3.0);
      cfg.iou_threshold = uniform(rng, 0.0, 0.5);
    }
    const std::vector<ScoredCandidate> got = nms_select(pool, cfg);
    const std::vector<std::size_t> want =
        brute_force_nms(pool, cfg.radius, cfg.iou_threshold);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].location == pool[want[i]].location &&
             got[i].log_prob == pool[want[i]].log_prob;
    }
    if (!same) ++mismatches;
    for (std::size_t i = 0; i < got.size(); ++i) {
      for (std::size_t j = i + 1; j < got.size(); ++j) {
        if (circle_iou(got[i].location, got[j].location, cfg.radius) > cfg.iou_threshold) {
          ++overlaps;
        }
      }
    }
  }
  const NmsConfig defaults;
  const bool defaults_ok =
      defaults.radius == 2.0 && defaults.iou_threshold == 0.0 && defaults.k == 6;
  std::ostringstream detail;
  detail << opt.pools << " pools of <= " << opt.max_pool << "; " << mismatches
         << " mismatches, " << overlaps << " overlapping pairs; defaults r="
         << defaults.radius << " gamma=" << defaults.iou_threshold << " k=" << defaults.k;
  return {"NMS equivalence", mismatches == 0 && overlaps == 0 && defaults_ok,
          detail.str()};
}

SuiteResult predictive_normalization(const NormalizationSuiteOptions& opt) {
  Rng rng(opt.seed);
  double worst_mass = 0.0;
  for (int m = 0; m < opt.mixtures; ++m) {
    const std::size_t C = 1 + static_cast<std::size_t>(rng() % 4);
    std::vector<NormalWishartParams> comps;
    for (std::size_t c = 0; c < C; ++c) {
      NormalWishartParams q = random_normal_wishart(rng);
      q.beta = uniform(rng, 0.5, 3.0);
      q.V = random_spd(rng, 0.3, 1.0);
      comps.push_back(q);
    }
    const MixturePosterior mix = MixturePosterior::with_uniform_weights(comps);
    const std::vector<double> weights = random_simplex(rng, C);
    const PredictiveMixture pred(mix, weights);

    // Scale length: largest standard deviation along any principal axis.
    double longest = 0.0, shortest = INFINITY;
    Vec2 lo = Vec2::Constant(INFINITY), hi = Vec2::Constant(-INFINITY);
    for (const StudentTParams& t : pred.components()) {
      const Eigen::SelfAdjointEigenSolver<Mat2> es(t.shape.matrix());
      longest = std::max(longest, std::sqrt(es.eigenvalues().maxCoeff()));
      shortest = std::min(shortest, std::sqrt(es.eigenvalues().minCoeff()));
      lo = lo.cwiseMin(t.loc);
      hi = hi.cwiseMax(t.loc);
    }
    lo -= Vec2::Constant(opt.scale_lengths * longest);
    hi += Vec2::Constant(opt.scale_lengths * longest);
    const double step = shortest / 4.0;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo).maxCoeff() / step)) + 1;
    const double mass = trapezoid_2d(
        [&](const Vec2& x) { return std::exp(pred.log_density(x)); }, lo, hi, n);
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
  }

  double worst_gauss = 0.0;
  for (int i = 0; i < opt.gaussian_points; ++i) {
    StudentTParams t;
    t.loc = Vec2(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0));
    t.shape = random_spd(rng, 0.3, 2.0);
    t.df = opt.large_df;
    const Vec2 x = t.loc + Vec2(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0));
    const double gauss = gaussian_log_pdf(x, t.loc, t.shape.matrix().inverse());
    worst_gauss = std::max(
        worst_gauss, std::abs(std::exp(student_t_log_density(x, t)) - std::exp(gauss)));
  }
  std::ostringstream detail;
  detail << opt.mixtures << " mixtures over +-" << opt.scale_lengths
         << " scale lengths: max |mass - 1| " << worst_mass << "; df=" << opt.large_df
         << " vs Gaussian max density gap " << worst_gauss;
  return {"predictive normalization",
          worst_mass <= opt.mass_tolerance && worst_gauss <= opt.gaussian_tolerance,
          detail.str()};
}

SuiteResult circle_geometry(const GeometrySuiteOptions& opt) {
  Rng rng(opt.seed);
  const double closed = circle_iou(Vec2::Zero(), Vec2(1.0, 0.0), 1.0);
  const McEstimate mc = mc_circle_iou(1.0, 1.0, opt.samples, rng);
  const double segment = segment_circle_iou(1.0, 1.0);
  const double at_zero = circle_iou(Vec2::Zero(), Vec2::Zero(), 1.0);
  const double at_touch = circle_iou(Vec2::Zero(), Vec2(2.0, 0.0), 1.0);
  const double beyond = circle_iou(Vec2::Zero(), Vec2(0.0, 5.0), 1.0);
  const bool passed = std::abs(closed - opt.expected_unit_iou) <= opt.tolerance &&
                      std::abs(closed - mc.mean) <= opt.tolerance &&
                      std::abs(closed - segment) <= 1e-12 && at_zero == 1.0 &&
                      at_touch == 0.0 && beyond == 0.0;
  std::ostringstream detail;
  detail << "IoU(r=1,d=1) " << closed << " vs MC " << mc.mean << " +- "
         << mc.standard_error << "; d=0 -> " << at_zero << ", d=2r -> " << at_touch;
  return {"circle IoU geometry", passed, detail.str()};
}

std::vector<SuiteResult> run_all_suites(bool fast) {
  McSuiteOptions mc;
  ElboSuiteOptions eb;
  GradientSuiteOptions gr;
  NmsSuiteOptions nm;
  NormalizationSuiteOptions pn;
  GeometrySuiteOptions ge;
  if (fast) {
    mc.pairs = 4;
    mc.samples = 100'000;
    eb.instances = 20;
    gr.parameters = 20;
    nm.pools = 100;
    pn.mixtures = 2;
    ge.samples = 400'000;
  }
  return {closed_form_vs_mc(mc),  elbo_bound(eb),
          spatial_gradient(gr),   nms_equivalence(nm),
          predictive_normalization(pn), circle_geometry(ge)};
}

}  // namespace gneva::verify
