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

#ifndef GNEVA_SPECIAL_MATH_HPP_
#define GNEVA_SPECIAL_MATH_HPP_

#include <span>

#include <Eigen/Core>

namespace gneva {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Scalar special functions. log_gamma uses the Lanczos approximation
// (g = 7, nine coefficients); digamma and trigamma shift the argument to
// x >= 6 by recurrence and then sum the asymptotic Bernoulli series.
double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

// log Gamma_D(a) = D(D-1)/4 log(pi) + sum_{j=1..D} log Gamma(a + (1-j)/2).
// Throws DomainError unless a > (D-1)/2.
double log_multivariate_gamma(double a, int dim);

// psi_D(a) = sum_{j=1..D} psi(a + (1-j)/2), the derivative of
// log_multivariate_gamma.
double multivariate_digamma(double a, int dim);

// Derivative of multivariate_digamma.
double multivariate_trigamma(double a, int dim);

// Numerically stable log(sum(exp(v))). Throws EmptyInput on an empty span.
double log_sum_exp(std::span<const double> values);

// Lower-triangular Cholesky factor of a 2x2 SPD matrix.
struct Cholesky2 {
  double l11 = 1.0;
  double l21 = 0.0;
  double l22 = 1.0;

  Mat2 matrix() const;
  // L * v
  Vec2 apply(const Vec2& v) const;
};

// Symmetric positive-definite 2x2 matrix. The Cholesky factor is computed
// on construction; construction fails with NotPositiveDefinite when
// a11 <= 1e-12 or det <= 1e-12 * a11 * a22.
class SPDMatrix2 {
 public:
  SPDMatrix2();  // identity
  SPDMatrix2(double a11, double a12, double a22);

  static SPDMatrix2 identity() { return SPDMatrix2(); }
  static SPDMatrix2 diagonal(double d1, double d2) { return {d1, 0.0, d2}; }
  // Builds L * L^T, which is positive definite whenever l11, l22 != 0.
  static SPDMatrix2 from_cholesky(const Cholesky2& chol);
  // Symmetrizes the input before validating it.
  static SPDMatrix2 from_matrix(const Mat2& m);

  double a11() const { return a11_; }
  double a12() const { return a12_; }
  double a22() const { return a22_; }

  const Cholesky2& cholesky() const { return chol_; }
  Mat2 matrix() const;
  double determinant() const { return a11_ * a22_ - a12_ * a12_; }
  double trace() const { return a11_ + a22_; }
  // x^T M x
  double quadratic_form(const Vec2& x) const;
  SPDMatrix2 scaled(double factor) const;

  bool operator==(const SPDMatrix2& other) const {
    return a11_ == other.a11_ && a12_ == other.a12_ && a22_ == other.a22_;
  }

 private:
  double a11_;
  double a12_;
  double a22_;
  Cholesky2 chol_;
};

// Returns true iff (a11, a12, a22) passes the positive-definiteness test.
bool is_positive_definite(double a11, double a12, double a22);

struct SpdFactorization {
  Cholesky2 chol;
  double log_det = 0.0;
  SPDMatrix2 inverse;
};

SpdFactorization spd_factorize(const SPDMatrix2& m);

}  // namespace gneva

#endif  // GNEVA_SPECIAL_MATH_HPP_
