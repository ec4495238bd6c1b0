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


#include "gneva/verify/reference_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gneva/errors.hpp"

namespace gneva::verify {
namespace {

using Real = long double;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Row = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

constexpr Real kPi = 3.141592653589793238462643383279502884L;
constexpr Real kFloor = 1e-3L;
constexpr Real kNormEpsilon = 1e-5L;

Real softplus_ld(Real x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Real log_mvgamma2(Real a) {
  return 0.5L * std::log(kPi) + std::lgamma(a) + std::lgamma(a - 0.5L);
}

Real mvdigamma2(Real a) { return digamma_ld(a) + digamma_ld(a - 0.5L); }

struct Sym2 {
  Real a11, a12, a22;
  Real det() const { return a11 * a22 - a12 * a12; }
  Real quad(Real x, Real y) const { return a11 * x * x + 2 * a12 * x * y + a22 * y * y; }
};

// Mirrors the production constraint: diagonal softplus + floor, shear
// clamped to 1e5 * l22, everything divided by `s`.
Sym2 constrained_v(Real raw11, Real raw21, Real raw22, Real s) {
  const Real l11 = (softplus_ld(raw11) + kFloor) / s;
  const Real l22 = (softplus_ld(raw22) + kFloor) / s;
  const Real l21 = std::clamp(raw21 / s, -1e5L * l22, 1e5L * l22);
  return {l11 * l11, l11 * l21, l21 * l21 + l22 * l22};
}

class Weights {
 public:
  explicit Weights(const ParamTape& tape) : tape_(tape) {}

  Mat get(const std::string& name) const {
    return tape_.view(tape_.slot(name)).cast<Real>();
  }

  Mat linear(const Mat& x, const std::string& name, bool bias = true) const {
    Mat y = x * get(name + ".weight");
    if (bias) y.rowwise() += get(name + ".bias").row(0);
    return y;
  }

  Mat layer_norm(const Mat& x, const std::string& name) const {
    const Row gain = get(name + ".gain").row(0);
    const Row offset = get(name + ".offset").row(0);
    Mat y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Real mean = x.row(i).sum() / static_cast<Real>(x.cols());
      Real var = 0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        var += (x(i, j) - mean) * (x(i, j) - mean);
      }
      var /= static_cast<Real>(x.cols());
      const Real inv = 1 / std::sqrt(var + kNormEpsilon);
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        y(i, j) = (x(i, j) - mean) * inv * gain(j) + offset(j);
      }
    }
    return y;
  }

  Mat mlp(const Mat& x, const std::string& name) const {
    const Mat h = layer_norm(linear(x, name + ".hidden"), name + ".norm");
    return linear(h.cwiseMax(Real(0)), name + ".output");
  }

  Mat attention(const Mat& x, const std::string& name, int heads) const {
    const Mat q = linear(x, name + ".wq", false);
    const Mat k = linear(x, name + ".wk", false);
    const Mat v = linear(x, name + ".wv", false);
    const Eigen::Index n = x.rows();
    const Eigen::Index dk = x.cols() / heads;
    const Real scale = 1 / std::sqrt(static_cast<Real>(dk));
    Mat out = Mat::Zero(n, x.cols());
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * dk;
      for (Eigen::Index i = 0; i < n; ++i) {
        Row s(n);
        for (Eigen::Index j = 0; j < n; ++j) {
          s(j) = scale * q.row(i).segment(c0, dk).dot(k.row(j).segment(c0, dk));
        }
        s = (s.array() - s.maxCoeff()).exp();
        s /= s.sum();
        for (Eigen::Index j = 0; j < n; ++j) {
          out.row(i).segment(c0, dk) += s(j) * v.row(j).segment(c0, dk);
        }
      }
    }
    return out;
  }

  Mat block(const Mat& x, const std::string& name, int heads) const {
    return layer_norm(x + attention(x, name + ".mha", heads).cwiseMax(Real(0)),
                      name + ".norm");
  }

  // Max-pooled per-vector MLP, one output row per polyline.
  Mat encode(const std::vector<Tensor>& polylines, const std::string& name,
             const std::vector<int>& scaled_columns, Real coord_scale,
             Eigen::Index hidden) const {
    Mat out(static_cast<Eigen::Index>(polylines.size()), hidden);
    for (std::size_t p = 0; p < polylines.size(); ++p) {
      Mat x = polylines[p].cast<Real>();
      for (int c : scaled_columns) x.col(c) /= coord_scale;
      const Mat h = mlp(x, name + ".mlp");
      out.row(static_cast<Eigen::Index>(p)) = h.colwise().maxCoeff();
    }
    return out;
  }

 private:
  const ParamTape& tape_;
};

Mat stack(const std::vector<const Mat*>& parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const Mat* p : parts) rows += p->rows();
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const Mat* p : parts) {
    for (Eigen::Index i = 0; i < p->rows(); ++i) out.row(r++) = p->row(i);
  }
  return out;
}

struct NwLd {
  Real eta_x, eta_y, beta;
  Sym2 V;
  Real nu;
};

}  // namespace

long double digamma_ld(long double x) {
  if (!(x > 0)) throw DomainError("digamma_ld: argument must be positive");
  Real shift = 0;
  while (x < 12) {
    shift -= 1 / x;
    x += 1;
  }
  const Real inv = 1 / x;
  const Real inv2 = inv * inv;
  // Asymptotic series in 1/x^2 (Bernoulli numbers B2..B12).
  const Real tail =
      inv2 * (1.0L / 12 -
              inv2 * (1.0L / 120 -
                      inv2 * (1.0L / 252 -
                              inv2 * (1.0L / 240 -
                                      inv2 * (1.0L / 132 - inv2 * (691.0L / 32760))))));
  return shift + std::log(x) - 0.5L * inv - tail;
}

ReferenceLoss reference_spatial_loss(const EncoderConfig& cfg,
                                     const ParamTape& tape,
                                     const VectorizedScene& scene,
                                     const Vec2& goal, double ce_weight,
                                     std::span<const double> ce_target) {
  const Weights w(tape);
  const Real s = cfg.coord_scale;
  const Eigen::Index hidden = cfg.hidden;
  const int C = cfg.components;

  const Mat m = w.encode(scene.map_polylines, "map_encoder", {0, 1, 2, 3}, s, hidden);
  const std::vector<int> agent_cols{0, 1, 2, 3, 5, 6};
  const Mat e = w.encode({scene.target}, "agent_encoder", agent_cols, s, hidden);
  const Mat o = w.encode(scene.others, "agent_encoder", agent_cols, s, hidden);

  Mat x = stack({&m, &e, &o}, hidden);
  for (int i = 0; i < cfg.context_layers; ++i) {
    x = w.block(x, "context.block" + std::to_string(i), cfg.n_heads);
  }
  const Mat ctx_feature = x.row(m.rows());
  const Mat ctx_raw = w.mlp(ctx_feature, "context.head");

  Mat kept_o(0, hidden);
  for (std::size_t i = 0; i < scene.others_observed_at_horizon.size(); ++i) {
    if (!scene.others_observed_at_horizon[i]) continue;
    kept_o.conservativeResize(kept_o.rows() + 1, hidden);
    kept_o.row(kept_o.rows() - 1) = o.row(static_cast<Eigen::Index>(i));
  }
  Mat y = stack({&e, &kept_o}, hidden);
  for (int i = 0; i < cfg.interaction_layers; ++i) {
    y = w.block(y, "interaction.block" + std::to_string(i), cfg.n_heads);
  }
  const Mat int_feature = y.row(0);
  const Mat int_raw = w.mlp(int_feature, "interaction.head");
  const Mat logits = w.mlp(ctx_feature + int_feature, "proxy");

  std::vector<NwLd> q(C);
  for (int c = 0; c < C; ++c) {
    q[c].eta_x = s * ctx_raw(0, 3 * c);
    q[c].eta_y = s * ctx_raw(0, 3 * c + 1);
    q[c].beta = softplus_ld(ctx_raw(0, 3 * c + 2)) + kFloor;
    q[c].V = constrained_v(int_raw(0, 4 * c), int_raw(0, 4 * c + 1),
                           int_raw(0, 4 * c + 2), s);
    q[c].nu = 3 + kFloor + softplus_ld(int_raw(0, 4 * c + 3));
  }
  const Mat p_eta = w.get("prior.eta");
  const Mat p_chol = w.get("prior.chol_raw");
  NwLd prior;
  prior.eta_x = p_eta(0, 0);
  prior.eta_y = p_eta(0, 1);
  prior.beta = softplus_ld(w.get("prior.beta_raw")(0, 0)) + kFloor;
  prior.V = constrained_v(p_chol(0, 0), p_chol(0, 1), p_chol(0, 2), 1);
  prior.nu = 3 + kFloor + softplus_ld(w.get("prior.nu_raw")(0, 0));

  const Real D = 2;
  const Real gx = goal.x(), gy = goal.y();
  const Real log_pi = -std::log(static_cast<Real>(C));
  std::vector<Real> emission(C);
  Real kl = 0;
  for (int c = 0; c < C; ++c) {
    const NwLd& qc = q[c];
    const Real e_log_det = std::log(qc.V.det()) + mvdigamma2(qc.nu / 2) + D * std::log(2.0L);
    const Real e_maha = qc.nu * qc.V.quad(gx - qc.eta_x, gy - qc.eta_y) + D / qc.beta;
    emission[c] = 0.5L * e_log_det - 0.5L * D * std::log(2 * kPi) - 0.5L * e_maha;

    const Real ratio = prior.beta / qc.beta;
    kl += 0.5L * prior.beta * qc.nu *
              qc.V.quad(qc.eta_x - prior.eta_x, qc.eta_y - prior.eta_y) +
          0.5L * D * (ratio - std::log(ratio) - 1);

    // tr(Vp^-1 Vq) for 2x2 symmetric matrices.
    const Sym2& vp = prior.V;
    const Sym2& vq = qc.V;
    const Real trace = (vp.a22 * vq.a11 - 2 * vp.a12 * vq.a12 + vp.a11 * vq.a22) / vp.det();
    kl += 0.5L * qc.nu * (trace - D) -
          0.5L * prior.nu * (std::log(vq.det()) - std::log(vp.det())) +
          log_mvgamma2(prior.nu / 2) - log_mvgamma2(qc.nu / 2) +
          0.5L * (qc.nu - prior.nu) * mvdigamma2(qc.nu / 2);
  }

  Real top = emission[0] + log_pi;
  for (int c = 1; c < C; ++c) top = std::max(top, emission[c] + log_pi);
  Real norm = 0;
  for (int c = 0; c < C; ++c) norm += std::exp(emission[c] + log_pi - top);
  const Real lse_resp = top + std::log(norm);
  std::vector<Real> r(C);
  Real expected = 0, kl_assign = 0;
  for (int c = 0; c < C; ++c) {
    r[c] = std::exp(emission[c] + log_pi - lse_resp);
    expected += r[c] * emission[c];
    if (r[c] > 0) kl_assign += r[c] * (std::log(r[c]) - log_pi);
  }

  ReferenceLoss out;
  out.elbo = expected - kl - kl_assign;
  const Real lmax = logits.maxCoeff();
  const Real lse = lmax + std::log((logits.array() - lmax).exp().sum());
  for (int c = 0; c < C; ++c) {
    const Real target = ce_target.empty() ? r[c] : static_cast<Real>(ce_target[c]);
    out.ce -= target * (logits(0, c) - lse);
  }
  out.loss = -out.elbo + static_cast<Real>(ce_weight) * out.ce;
  return out;
}

}  // namespace gneva::verify
