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


#include "gneva/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace gneva::verify {
namespace {

constexpr double kPi = std::numbers::pi;

// Running mean and variance (Welford) so 1e6-sample sums stay accurate.
class Accumulator {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  McEstimate estimate() const {
    McEstimate e;
    e.mean = mean_;
    e.samples = n_;
    e.standard_error =
        n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_))
               : 0.0;
    return e;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double log_mvgamma2(double a) {
  return 0.5 * std::log(kPi) + std::lgamma(a) + std::lgamma(a - 0.5);
}

Vec2 draw_gaussian(const Vec2& mean, const Mat2& precision, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec2 z(normal(rng), normal(rng));
  // precision = U U^T  =>  U^-T z has covariance precision^-1.
  const Eigen::LLT<Mat2> llt(precision);
  return mean + llt.matrixU().solve(z);
}

}  // namespace

double McEstimate::z_score(double value) const {
  if (standard_error == 0.0) return value == mean ? 0.0 : INFINITY;
  return std::abs(value - mean) / standard_error;
}

Mat2 bartlett_wishart(const Mat2& scale, double dof, Rng& rng) {
  std::chi_squared_distribution<double> chi_first(dof);
  std::chi_squared_distribution<double> chi_second(dof - 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat2 a = Mat2::Zero();
  a(0, 0) = std::sqrt(chi_first(rng));
  a(1, 0) = normal(rng);
  a(1, 1) = std::sqrt(chi_second(rng));
  const Mat2 l = Eigen::LLT<Mat2>(scale).matrixL();
  const Mat2 la = l * a;
  return la * la.transpose();
}

JointDraw draw_normal_wishart(const NormalWishartParams& p, Rng& rng) {
  JointDraw d;
  d.precision = bartlett_wishart(p.V.matrix(), p.nu, rng);
  d.mean = draw_gaussian(p.eta, p.beta * d.precision, rng);
  return d;
}

double gaussian_log_pdf(const Vec2& x, const Vec2& mean, const Mat2& precision) {
  const Vec2 d = x - mean;
  return 0.5 * std::log(precision.determinant()) - std::log(2.0 * kPi) -
         0.5 * d.dot(precision * d);
}

double wishart_log_pdf(const Mat2& lambda, const Mat2& scale, double dof) {
  constexpr double dim = 2.0;
  return 0.5 * (dof - dim - 1.0) * std::log(lambda.determinant()) -
         0.5 * (scale.inverse() * lambda).trace() -
         0.5 * dof * dim * std::log(2.0) -
         0.5 * dof * std::log(scale.determinant()) - log_mvgamma2(0.5 * dof);
}

McEstimate mc_kl_mean_given_precision(const NormalWishartParams& q,
                                      const NormalWishartParams& p,
                                      std::size_t samples, Rng& rng) {
  Accumulator acc;
  for (std::size_t i = 0; i < samples; ++i) {
    const JointDraw d = draw_normal_wishart(q, rng);
    acc.add(gaussian_log_pdf(d.mean, q.eta, q.beta * d.precision) -
            gaussian_log_pdf(d.mean, p.eta, p.beta * d.precision));
  }
  return acc.estimate();
}

McEstimate mc_kl_wishart(const WishartParams& q, const WishartParams& p,
                         std::size_t samples, Rng& rng) {
  const Mat2 vq = q.V.matrix();
  const Mat2 vp = p.V.matrix();
  Accumulator acc;
  for (std::size_t i = 0; i < samples; ++i) {
    const Mat2 lambda = bartlett_wishart(vq, q.nu, rng);
    acc.add(wishart_log_pdf(lambda, vq, q.nu) - wishart_log_pdf(lambda, vp, p.nu));
  }
  return acc.estimate();
}

McExpectedStats mc_expected_stats(const Vec2& g, const NormalWishartParams& q,
                                  std::size_t samples, Rng& rng) {
  Accumulator log_det, maha;
  for (std::size_t i = 0; i < samples; ++i) {
    const JointDraw d = draw_normal_wishart(q, rng);
    const Vec2 r = g - d.mean;
    log_det.add(std::log(d.precision.determinant()));
    maha.add(r.dot(d.precision * r));
  }
  return {log_det.estimate(), maha.estimate()};
}

McEstimate mc_prior_log_evidence(const Vec2& g, const NormalWishartParams& prior,
                                 std::size_t samples, Rng& rng) {
  // Work relative to the largest log-likelihood seen so the average does not
  // underflow; the shift cancels in the delta-method error.
  std::vector<double> logs(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const JointDraw d = draw_normal_wishart(prior, rng);
    logs[i] = gaussian_log_pdf(g, d.mean, d.precision);
  }
  const double shift = *std::max_element(logs.begin(), logs.end());
  Accumulator acc;
  for (double l : logs) acc.add(std::exp(l - shift));
  const McEstimate linear = acc.estimate();
  McEstimate e;
  e.samples = samples;
  e.mean = std::log(linear.mean) + shift;
  e.standard_error = linear.standard_error / linear.mean;
  return e;
}

std::vector<std::size_t> brute_force_nms(const std::vector<ScoredCandidate>& pool,
                                         double radius, double iou_threshold) {
  std::list<std::size_t> remaining;
  for (std::size_t i = 0; i < pool.size(); ++i) remaining.push_back(i);
  std::vector<std::size_t> selected;
  while (!remaining.empty()) {
    // Most probable first; the earliest index wins a tie.
    auto best = remaining.begin();
    for (auto it = remaining.begin(); it != remaining.end(); ++it) {
      if (pool[*it].log_prob > pool[*best].log_prob) best = it;
    }
    const std::size_t chosen = *best;
    selected.push_back(chosen);
    remaining.erase(best);
    for (auto it = remaining.begin(); it != remaining.end();) {
      const double d = (pool[*it].location - pool[chosen].location).norm();
      if (segment_circle_iou(radius, d) > iou_threshold) {
        it = remaining.erase(it);
      } else {
        ++it;
      }
    }
  }
  return selected;
}

double segment_circle_iou(double radius, double distance) {
  if (distance >= 2.0 * radius) return 0.0;
  // Each circle contributes a segment with central angle theta.
  const double theta = 2.0 * std::acos(distance / (2.0 * radius));
  const double segment = 0.5 * radius * radius * (theta - std::sin(theta));
  const double overlap = 2.0 * segment;
  const double circle = kPi * radius * radius;
  return overlap / (2.0 * circle - overlap);
}

McEstimate mc_circle_iou(double radius, double distance, std::size_t samples,
                         Rng& rng) {
  std::uniform_real_distribution<double> ux(-radius, distance + radius);
  std::uniform_real_distribution<double> uy(-radius, radius);
  const double r2 = radius * radius;
  std::size_t both = 0, either = 0;
  std::vector<std::pair<bool, bool>> hits(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = ux(rng), y = uy(rng);
    const bool in_a = x * x + y * y <= r2;
    const bool in_b = (x - distance) * (x - distance) + y * y <= r2;
    hits[i] = {in_a && in_b, in_a || in_b};
    both += hits[i].first;
    either += hits[i].second;
  }
  McEstimate e;
  e.samples = samples;
  e.mean = either > 0 ? static_cast<double>(both) / static_cast<double>(either) : 0.0;
  // Ratio estimator: var of (both_i - iou * either_i) over mean(either)^2.
  Accumulator resid;
  for (const auto& [b, u] : hits) resid.add(static_cast<double>(b) - e.mean * u);
  const double mean_either = static_cast<double>(either) / static_cast<double>(samples);
  e.standard_error = mean_either > 0.0
                         ? resid.estimate().standard_error / mean_either
                         : 0.0;
  return e;
}

double trapezoid_2d(const std::function<double(const Vec2&)>& density,
                    const Vec2& lo, const Vec2& hi, std::size_t n) {
  const double hx = (hi.x() - lo.x()) / static_cast<double>(n - 1);
  const double hy = (hi.y() - lo.y()) / static_cast<double>(n - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wx = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double wy = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
      row += wy * density(Vec2(lo.x() + hx * static_cast<double>(i),
                               lo.y() + hy * static_cast<double>(j)));
    }
    total += wx * row;
  }
  return total * hx * hy;
}

}  // namespace gneva::verify
