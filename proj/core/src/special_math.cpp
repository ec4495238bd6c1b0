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

#include "gneva/special_math.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gneva/errors.hpp"

namespace gneva {
namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoefficients = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

// Series truncation error is below 1e-16 once the argument reaches this.
constexpr double kAsymptoticShift = 10.0;

bool is_nonpositive_integer(double x) {
  return x <= 0.0 && std::floor(x) == x;
}

void check_multivariate_domain(double a, int dim, const char* name) {
  if (dim < 1) {
    throw DomainError(std::string(name) + ": dimension must be positive");
  }
  if (!(a > 0.5 * (dim - 1))) {
    throw DomainError(std::string(name) + ": argument " + std::to_string(a) +
                      " must exceed (D-1)/2 = " +
                      std::to_string(0.5 * (dim - 1)));
  }
}

}  // namespace

double log_gamma(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) {
    return std::numeric_limits<double>::infinity();
  }
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
           log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double series = kLanczosCoefficients[0];
  for (std::size_t i = 1; i < kLanczosCoefficients.size(); ++i) {
    series += kLanczosCoefficients[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(series);
}

double digamma(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) {
    throw DomainError("digamma: pole at non-positive integer");
  }
  if (x < 0.0) {
    // psi(1 - x) - psi(x) = pi cot(pi x)
    return digamma(1.0 - x) -
           std::numbers::pi / std::tan(std::numbers::pi * x);
  }
  double result = 0.0;
  while (x < kAsymptoticShift) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_2k / (2k x^2k), k = 1..7, in Horner form.
  const double series =
      inv2 * (1.0 / 12 -
       inv2 * (1.0 / 120 -
        inv2 * (1.0 / 252 -
         inv2 * (1.0 / 240 -
          inv2 * (1.0 / 132 -
           inv2 * (691.0 / 32760 - inv2 * (1.0 / 12)))))));
  return result + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  if (std::isnan(x)) return x;
  if (x <= 0.0) {
    throw DomainError("trigamma: argument must be positive");
  }
  double result = 0.0;
  while (x < kAsymptoticShift) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1)
  const double series =
      inv * inv2 * (1.0 / 6 -
       inv2 * (1.0 / 30 -
        inv2 * (1.0 / 42 -
         inv2 * (1.0 / 30 -
          inv2 * (5.0 / 66 -
           inv2 * (691.0 / 2730 - inv2 * (7.0 / 6)))))));
  return result + inv + 0.5 * inv2 + series;
}

double log_multivariate_gamma(double a, int dim) {
  check_multivariate_domain(a, dim, "log_multivariate_gamma");
  double result = 0.25 * dim * (dim - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= dim; ++j) {
    result += log_gamma(a + 0.5 * (1 - j));
  }
  return result;
}

double multivariate_digamma(double a, int dim) {
  check_multivariate_domain(a, dim, "multivariate_digamma");
  double result = 0.0;
  for (int j = 1; j <= dim; ++j) {
    result += digamma(a + 0.5 * (1 - j));
  }
  return result;
}

double multivariate_trigamma(double a, int dim) {
  check_multivariate_domain(a, dim, "multivariate_trigamma");
  double result = 0.0;
  for (int j = 1; j <= dim; ++j) {
    result += trigamma(a + 0.5 * (1 - j));
  }
  return result;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    throw EmptyInput("log_sum_exp: empty input");
  }
  if (values.size() == 1) return values[0];
  const double max = *std::max_element(values.begin(), values.end());
  if (std::isinf(max)) return max;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

Mat2 Cholesky2::matrix() const {
  Mat2 l;
  l << l11, 0.0, l21, l22;
  return l;
}

Vec2 Cholesky2::apply(const Vec2& v) const {
  return {l11 * v.x(), l21 * v.x() + l22 * v.y()};
}

bool is_positive_definite(double a11, double a12, double a22) {
  if (!std::isfinite(a11) || !std::isfinite(a12) || !std::isfinite(a22)) {
    return false;
  }
  if (a11 <= 1e-12) return false;
  const double det = a11 * a22 - a12 * a12;
  return det > 1e-12 * a11 * a22;
}

SPDMatrix2::SPDMatrix2() : a11_(1.0), a12_(0.0), a22_(1.0) {}

SPDMatrix2::SPDMatrix2(double a11, double a12, double a22)
    : a11_(a11), a12_(a12), a22_(a22) {
  if (!is_positive_definite(a11, a12, a22)) {
    throw NotPositiveDefinite("matrix [[" + std::to_string(a11) + ", " +
                              std::to_string(a12) + "], [" +
                              std::to_string(a12) + ", " +
                              std::to_string(a22) +
                              "]] is not positive definite");
  }
  chol_.l11 = std::sqrt(a11);
  chol_.l21 = a12 / chol_.l11;
  chol_.l22 = std::sqrt(a22 - chol_.l21 * chol_.l21);
}

SPDMatrix2 SPDMatrix2::from_cholesky(const Cholesky2& chol) {
  return {chol.l11 * chol.l11, chol.l11 * chol.l21,
          chol.l21 * chol.l21 + chol.l22 * chol.l22};
}

SPDMatrix2 SPDMatrix2::from_matrix(const Mat2& m) {
  return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)};
}

Mat2 SPDMatrix2::matrix() const {
  Mat2 m;
  m << a11_, a12_, a12_, a22_;
  return m;
}

double SPDMatrix2::quadratic_form(const Vec2& x) const {
  return a11_ * x.x() * x.x() + 2.0 * a12_ * x.x() * x.y() +
         a22_ * x.y() * x.y();
}

SPDMatrix2 SPDMatrix2::scaled(double factor) const {
  return {a11_ * factor, a12_ * factor, a22_ * factor};
}

SpdFactorization spd_factorize(const SPDMatrix2& m) {
  SpdFactorization out;
  out.chol = m.cholesky();
  out.log_det = 2.0 * (std::log(out.chol.l11) + std::log(out.chol.l22));
  const double det = m.determinant();
  out.inverse = SPDMatrix2(m.a22() / det, -m.a12() / det, m.a11() / det);
  return out;
}

}  // namespace gneva
