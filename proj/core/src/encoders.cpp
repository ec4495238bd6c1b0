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

#include "gneva/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gneva/errors.hpp"

namespace gneva {
namespace {

constexpr double kPositiveFloor = 1e-3;
// nu > 3 must survive softplus underflow, hence the extra floor.
constexpr double kNuFloor = 3.0 + kPositiveFloor;
// |l21| <= kMaxShear * l22 keeps det(V) / (V11 V22) above 1e-10, inside the
// positive-definiteness tolerance for every raw head value.
constexpr double kMaxShear = 1e5;

Cholesky2 constrained_cholesky(double raw11, double raw21, double raw22,
                               double scale) {
  Cholesky2 l;
  l.l11 = (softplus(raw11) + kPositiveFloor) * scale;
  l.l22 = (softplus(raw22) + kPositiveFloor) * scale;
  const double bound = kMaxShear * l.l22;
  l.l21 = std::clamp(raw21 * scale, -bound, bound);
  return l;
}

// Gradient of constrained_cholesky with respect to (raw11, raw21, raw22).
std::array<double, 3> constrained_cholesky_backward(double raw11, double raw21,
                                                    double raw22, double scale,
                                                    const Mat2& dV) {
  const Cholesky2 l = constrained_cholesky(raw11, raw21, raw22, scale);
  auto dl = cholesky_backward(l, dV);
  const double bound = kMaxShear * l.l22;
  double d21 = dl[1] * scale;
  if (std::abs(raw21 * scale) > bound) {
    dl[2] += (l.l21 > 0.0 ? kMaxShear : -kMaxShear) * dl[1];
    d21 = 0.0;
  }
  return {dl[0] * scale * sigmoid(raw11), d21, dl[2] * scale * sigmoid(raw22)};
}

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

Tensor stack_rows(const std::vector<const Tensor*>& parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const Tensor* p : parts) rows += p->rows();
  Tensor out(rows, cols);
  Eigen::Index r = 0;
  for (const Tensor* p : parts) {
    if (p->rows() == 0) continue;
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

std::vector<SelfAttentionBlock> make_blocks(ParamTape& tape,
                                            const std::string& name, int count,
                                            const EncoderConfig& cfg) {
  std::vector<SelfAttentionBlock> blocks;
  for (int i = 0; i < count; ++i) {
    blocks.emplace_back(tape, name + ".block" + std::to_string(i), cfg.hidden,
                        cfg.n_heads);
  }
  return blocks;
}

Tensor run_blocks(const ParamTape& tape,
                  const std::vector<SelfAttentionBlock>& blocks, Tensor x,
                  std::vector<SelfAttentionBlock::Cache>* caches) {
  if (caches) caches->resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    x = blocks[i].forward(tape, x, caches ? &(*caches)[i] : nullptr);
  }
  return x;
}

Tensor backprop_blocks(const ParamTape& tape,
                       const std::vector<SelfAttentionBlock>& blocks,
                       const std::vector<SelfAttentionBlock::Cache>& caches,
                       Tensor dy, GradBuffer& grads) {
  for (std::size_t i = blocks.size(); i-- > 0;) {
    dy = blocks[i].backward(tape, caches[i], dy, grads);
  }
  return dy;
}

Eigen::RowVectorXd map_input_scale(double s) {
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(kMapVectorWidth);
  scale.head(4).setConstant(1.0 / s);
  return scale;
}

Eigen::RowVectorXd agent_input_scale(double s) {
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(kAgentVectorWidth);
  scale.head(4).setConstant(1.0 / s);
  scale(5) = 1.0 / s;
  scale(6) = 1.0 / s;
  return scale;
}

}  // namespace

std::array<double, 3> cholesky_backward(const Cholesky2& chol, const Mat2& dV) {
  const Mat2 g = dV + dV.transpose();
  return {g(0, 0) * chol.l11 + g(0, 1) * chol.l21,
          g(1, 0) * chol.l11 + g(1, 1) * chol.l21, g(1, 1) * chol.l22};
}

std::vector<double> softmax(const Tensor& logits) {
  const double m = logits.maxCoeff();
  std::vector<double> w(logits.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(logits.data()[i] - m);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// ---------------------------------------------------------------------------

PolylineEncoder::PolylineEncoder(ParamTape& tape, const std::string& name,
                                 Eigen::RowVectorXd input_scale,
                                 Eigen::Index hidden)
    : mlp_(tape, name + ".mlp", input_scale.size(), hidden, hidden),
      input_scale_(std::move(input_scale)) {}

Tensor PolylineEncoder::forward(const ParamTape& tape,
                                const std::vector<const Tensor*>& polylines,
                                Cache* cache) const {
  const Eigen::Index width = input_scale_.size();
  std::vector<Eigen::Index> offsets;
  Eigen::Index total = 0;
  for (const Tensor* p : polylines) {
    if (p->cols() != width) {
      throw ShapeMismatch("PolylineEncoder: vector width " +
                          std::to_string(p->cols()) + " != " +
                          std::to_string(width));
    }
    if (p->rows() == 0) {
      throw ShapeMismatch("PolylineEncoder: polyline without vectors");
    }
    offsets.push_back(total);
    total += p->rows();
  }
  Tensor x = stack_rows(polylines, width);
  x.array().rowwise() *= input_scale_.array();

  Mlp::Cache mlp_cache;
  const Tensor h = total > 0 ? mlp_.forward(tape, x, cache ? &mlp_cache : nullptr)
                             : Tensor(0, 0);
  const Eigen::Index hidden = h.cols();
  Tensor out(static_cast<Eigen::Index>(polylines.size()),
             total > 0 ? hidden : 0);
  Eigen::MatrixXi argmax(out.rows(), out.cols());
  for (std::size_t p = 0; p < polylines.size(); ++p) {
    const Eigen::Index r0 = offsets[p];
    const Eigen::Index n = polylines[p]->rows();
    for (Eigen::Index j = 0; j < hidden; ++j) {
      Eigen::Index best = 0;
      double v = h(r0, j);
      for (Eigen::Index i = 1; i < n; ++i) {
        if (h(r0 + i, j) > v) {
          v = h(r0 + i, j);
          best = i;
        }
      }
      out(p, j) = v;
      argmax(p, j) = static_cast<int>(r0 + best);
    }
  }
  if (cache) {
    cache->mlp = std::move(mlp_cache);
    cache->row_offsets = std::move(offsets);
    cache->argmax = std::move(argmax);
    cache->total_rows = total;
  }
  return out;
}

void PolylineEncoder::backward(const ParamTape& tape, const Cache& cache,
                               const Tensor& dy, GradBuffer& grads) const {
  if (cache.total_rows == 0) return;
  Tensor dh = Tensor::Zero(cache.total_rows, dy.cols());
  for (Eigen::Index p = 0; p < dy.rows(); ++p) {
    for (Eigen::Index j = 0; j < dy.cols(); ++j) {
      dh(cache.argmax(p, j), j) += dy(p, j);
    }
  }
  mlp_.backward(tape, cache.mlp, dh, grads);
}

// ---------------------------------------------------------------------------

ContextAttention::ContextAttention(ParamTape& tape, const EncoderConfig& cfg)
    : blocks_(make_blocks(tape, "context", cfg.context_layers, cfg)),
      head_(tape, "context.head", cfg.hidden, cfg.hidden, 3 * cfg.components),
      components_(cfg.components),
      coord_scale_(cfg.coord_scale) {}

ContextOutput ContextAttention::forward(const ParamTape& tape,
                                        const PolylineFeatures& f,
                                        Cache* cache) const {
  const Tensor x = stack_rows({&f.m, &f.e, &f.o}, f.e.cols());
  const Eigen::Index target_row = f.m.rows();
  const Tensor y =
      run_blocks(tape, blocks_, x, cache ? &cache->blocks : nullptr);
  ContextOutput out;
  out.feature = y.row(target_row);
  Mlp::Cache head_cache;
  const Tensor raw =
      head_.forward(tape, out.feature, cache ? &head_cache : nullptr);
  for (int c = 0; c < components_; ++c) {
    out.eta.emplace_back(coord_scale_ * raw(0, 3 * c),
                         coord_scale_ * raw(0, 3 * c + 1));
    out.beta.push_back(softplus(raw(0, 3 * c + 2)) + kPositiveFloor);
  }
  if (cache) {
    cache->target_row = target_row;
    cache->rows = x.rows();
    cache->head = std::move(head_cache);
    cache->raw = raw;
  }
  return out;
}

PolylineFeatures ContextAttention::backward(const ParamTape& tape,
                                            const Cache& cache,
                                            const Grad& grad,
                                            std::size_t map_rows,
                                            std::size_t other_rows,
                                            GradBuffer& grads) const {
  Tensor d_raw = Tensor::Zero(1, 3 * components_);
  for (int c = 0; c < components_; ++c) {
    if (!grad.eta.empty()) {
      d_raw(0, 3 * c) = coord_scale_ * grad.eta[c].x();
      d_raw(0, 3 * c + 1) = coord_scale_ * grad.eta[c].y();
    }
    if (!grad.beta.empty()) {
      d_raw(0, 3 * c + 2) = grad.beta[c] * sigmoid(cache.raw(0, 3 * c + 2));
    }
  }
  Tensor d_feature = head_.backward(tape, cache.head, d_raw, grads);
  if (grad.feature.size() > 0) d_feature += grad.feature;
  Tensor dy = Tensor::Zero(cache.rows, d_feature.cols());
  dy.row(cache.target_row) = d_feature;
  const Tensor dx = backprop_blocks(tape, blocks_, cache.blocks, dy, grads);
  PolylineFeatures d;
  const auto m = static_cast<Eigen::Index>(map_rows);
  const auto o = static_cast<Eigen::Index>(other_rows);
  d.m = dx.topRows(m);
  d.e = dx.middleRows(m, 1);
  d.o = dx.bottomRows(o);
  return d;
}

void ContextAttention::set_mean_anchors(ParamTape& tape,
                                        const std::vector<Vec2>& anchors) const {
  if (static_cast<int>(anchors.size()) != components_) {
    throw ShapeMismatch("set_mean_anchors: need one anchor per component");
  }
  auto bias = tape.view(head_.output_layer().bias_slot());
  for (int c = 0; c < components_; ++c) {
    bias(0, 3 * c) = anchors[c].x() / coord_scale_;
    bias(0, 3 * c + 1) = anchors[c].y() / coord_scale_;
  }
}

// ---------------------------------------------------------------------------

InteractionAttention::InteractionAttention(ParamTape& tape,
                                           const EncoderConfig& cfg)
    : blocks_(make_blocks(tape, "interaction", cfg.interaction_layers, cfg)),
      head_(tape, "interaction.head", cfg.hidden, cfg.hidden,
            4 * cfg.components),
      components_(cfg.components),
      coord_scale_(cfg.coord_scale) {}

InteractionOutput InteractionAttention::forward(const ParamTape& tape,
                                                const Tensor& e,
                                                const Tensor& o,
                                                const std::vector<bool>& mask,
                                                Cache* cache) const {
  if (static_cast<Eigen::Index>(mask.size()) != o.rows()) {
    throw ShapeMismatch("InteractionAttention: mask size != surrounding rows");
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) kept.push_back(i);
  }
  Tensor x(1 + static_cast<Eigen::Index>(kept.size()), e.cols());
  x.row(0) = e.row(0);
  for (std::size_t i = 0; i < kept.size(); ++i) x.row(1 + i) = o.row(kept[i]);
  const Tensor y =
      run_blocks(tape, blocks_, x, cache ? &cache->blocks : nullptr);

  InteractionOutput out;
  out.feature = y.row(0);
  Mlp::Cache head_cache;
  const Tensor raw =
      head_.forward(tape, out.feature, cache ? &head_cache : nullptr);
  const double inv_scale = 1.0 / coord_scale_;
  for (int c = 0; c < components_; ++c) {
    const Cholesky2 l = constrained_cholesky(raw(0, 4 * c), raw(0, 4 * c + 1),
                                             raw(0, 4 * c + 2), inv_scale);
    out.V_chol.push_back(l);
    out.V.push_back(SPDMatrix2::from_cholesky(l));
    out.nu.push_back(kNuFloor + softplus(raw(0, 4 * c + 3)));
  }
  if (cache) {
    cache->kept = std::move(kept);
    cache->head = std::move(head_cache);
    cache->raw = raw;
  }
  return out;
}

void InteractionAttention::backward(const ParamTape& tape, const Cache& cache,
                                    const Grad& grad, Tensor& de, Tensor& do_,
                                    GradBuffer& grads) const {
  const double inv_scale = 1.0 / coord_scale_;
  Tensor d_raw = Tensor::Zero(1, 4 * components_);
  for (int c = 0; c < components_; ++c) {
    if (!grad.V.empty()) {
      const auto dl = constrained_cholesky_backward(
          cache.raw(0, 4 * c), cache.raw(0, 4 * c + 1), cache.raw(0, 4 * c + 2),
          inv_scale, grad.V[c]);
      d_raw(0, 4 * c) = dl[0];
      d_raw(0, 4 * c + 1) = dl[1];
      d_raw(0, 4 * c + 2) = dl[2];
    }
    if (!grad.nu.empty()) {
      d_raw(0, 4 * c + 3) = grad.nu[c] * sigmoid(cache.raw(0, 4 * c + 3));
    }
  }
  Tensor d_feature = head_.backward(tape, cache.head, d_raw, grads);
  if (grad.feature.size() > 0) d_feature += grad.feature;
  Tensor dy = Tensor::Zero(1 + static_cast<Eigen::Index>(cache.kept.size()),
                           d_feature.cols());
  dy.row(0) = d_feature;
  const Tensor dx = backprop_blocks(tape, blocks_, cache.blocks, dy, grads);
  de.row(0) += dx.row(0);
  for (std::size_t i = 0; i < cache.kept.size(); ++i) {
    do_.row(cache.kept[i]) += dx.row(1 + i);
  }
}

// ---------------------------------------------------------------------------

ZProxy::ZProxy(ParamTape& tape, const EncoderConfig& cfg)
    : mlp_(tape, "proxy", cfg.hidden, cfg.hidden, cfg.components) {}

Tensor ZProxy::logits(const ParamTape& tape, const Tensor& context_feature,
                      Cache* cache) const {
  return mlp_.forward(tape, context_feature, cache ? &cache->mlp : nullptr);
}

Tensor ZProxy::backward(const ParamTape& tape, const Cache& cache,
                        const Tensor& d_logits, GradBuffer& grads) const {
  return mlp_.backward(tape, cache.mlp, d_logits, grads);
}

// ---------------------------------------------------------------------------

PriorParams::PriorParams(ParamTape& tape) {
  eta_ = tape.add("prior.eta", 1, 2);
  beta_raw_ = tape.add("prior.beta_raw", 1, 1);
  chol_raw_ = tape.add("prior.chol_raw", 1, 3);
  nu_raw_ = tape.add("prior.nu_raw", 1, 1);
  tape.view(beta_raw_)(0, 0) = inverse_softplus(1.0 - kPositiveFloor);
  const double diag = inverse_softplus(std::sqrt(0.1) - kPositiveFloor);
  tape.view(chol_raw_) << diag, 0.0, diag;
  tape.view(nu_raw_)(0, 0) = inverse_softplus(4.0 - kNuFloor);
}

NormalWishartParams PriorParams::value(const ParamTape& tape) const {
  const auto eta = tape.view(eta_);
  const auto chol = tape.view(chol_raw_);
  NormalWishartParams p;
  p.eta = Vec2(eta(0, 0), eta(0, 1));
  p.beta = softplus(tape.view(beta_raw_)(0, 0)) + kPositiveFloor;
  p.V = SPDMatrix2::from_cholesky(
      constrained_cholesky(chol(0, 0), chol(0, 1), chol(0, 2), 1.0));
  p.nu = kNuFloor + softplus(tape.view(nu_raw_)(0, 0));
  return p;
}

void PriorParams::set_value(ParamTape& tape, const NormalWishartParams& p) const {
  if (!(p.beta > kPositiveFloor) || !(p.nu > kNuFloor)) {
    throw DomainError("PriorParams::set_value: beta or nu below the constraint floor");
  }
  auto floor_inv = [](double y) {
    return inverse_softplus(std::max(y - kPositiveFloor, 1e-12));
  };
  tape.view(eta_) << p.eta.x(), p.eta.y();
  tape.view(beta_raw_)(0, 0) = inverse_softplus(p.beta - kPositiveFloor);
  const Cholesky2& l = p.V.cholesky();
  tape.view(chol_raw_) << floor_inv(l.l11), l.l21, floor_inv(l.l22);
  tape.view(nu_raw_)(0, 0) = inverse_softplus(p.nu - kNuFloor);
}

void PriorParams::backward(const ParamTape& tape,
                           const NormalWishartGradient& grad,
                           GradBuffer& grads) const {
  auto d_eta = grad_view(grads, eta_);
  d_eta(0, 0) += grad.d_eta.x();
  d_eta(0, 1) += grad.d_eta.y();
  grad_view(grads, beta_raw_)(0, 0) +=
      grad.d_beta * sigmoid(tape.view(beta_raw_)(0, 0));
  const auto chol = tape.view(chol_raw_);
  const auto dl = constrained_cholesky_backward(chol(0, 0), chol(0, 1),
                                                chol(0, 2), 1.0, grad.d_V);
  auto d_chol = grad_view(grads, chol_raw_);
  d_chol(0, 0) += dl[0];
  d_chol(0, 1) += dl[1];
  d_chol(0, 2) += dl[2];
  grad_view(grads, nu_raw_)(0, 0) +=
      grad.d_nu * sigmoid(tape.view(nu_raw_)(0, 0));
}

// ---------------------------------------------------------------------------

SpatialModel::SpatialModel(ParamTape& tape, const EncoderConfig& cfg)
    : cfg_(cfg) {
  cfg_.validate();
  map_encoder_ = PolylineEncoder(tape, "map_encoder",
                                 map_input_scale(cfg.coord_scale), cfg.hidden);
  agent_encoder_ = PolylineEncoder(
      tape, "agent_encoder", agent_input_scale(cfg.coord_scale), cfg.hidden);
  context_ = ContextAttention(tape, cfg_);
  interaction_ = InteractionAttention(tape, cfg_);
  proxy_ = ZProxy(tape, cfg_);
  prior_ = PriorParams(tape);
}

PolylineFeatures SpatialModel::encode_polylines(const ParamTape& tape,
                                                const VectorizedScene& scene,
                                                Cache* cache) const {
  if (scene.target.rows() == 0) {
    throw ShapeMismatch("encode_polylines: target history has no vectors");
  }
  PolylineFeatures f;
  std::vector<const Tensor*> map_parts, other_parts;
  for (const auto& p : scene.map_polylines) map_parts.push_back(&p);
  for (const auto& p : scene.others) other_parts.push_back(&p);
  f.m = map_encoder_.forward(tape, map_parts, cache ? &cache->map_enc : nullptr);
  f.e = agent_encoder_.forward(tape, {&scene.target},
                               cache ? &cache->target_enc : nullptr);
  f.o = agent_encoder_.forward(tape, other_parts,
                               cache ? &cache->other_enc : nullptr);
  // Empty sets still carry the feature width.
  if (f.m.rows() == 0) f.m.resize(0, cfg_.hidden);
  if (f.o.rows() == 0) f.o.resize(0, cfg_.hidden);
  return f;
}

SpatialOutput SpatialModel::forward(const ParamTape& tape,
                                    const VectorizedScene& scene,
                                    Cache* cache) const {
  PolylineFeatures f = encode_polylines(tape, scene, cache);
  ContextOutput ctx =
      context_.forward(tape, f, cache ? &cache->context : nullptr);
  InteractionOutput inter =
      interaction_.forward(tape, f.e, f.o, scene.others_observed_at_horizon,
                           cache ? &cache->interaction : nullptr);
  SpatialOutput out;
  out.context_feature = ctx.feature + inter.feature;
  out.logits = proxy_.logits(tape, out.context_feature,
                             cache ? &cache->proxy : nullptr);
  out.weights = softmax(out.logits);
  std::vector<NormalWishartParams> components;
  for (int c = 0; c < cfg_.components; ++c) {
    components.push_back({ctx.eta[c], ctx.beta[c], inter.V[c], inter.nu[c]});
  }
  out.mixture = MixturePosterior::with_uniform_weights(std::move(components));
  out.prior = prior_.value(tape);
  if (cache) {
    cache->features = std::move(f);
    cache->context_out = std::move(ctx);
    cache->interaction_out = std::move(inter);
  }
  return out;
}

void SpatialModel::backward(const ParamTape& tape, const Cache& cache,
                            const SpatialOutputGrad& grad,
                            GradBuffer& grads) const {
  const Eigen::Index hidden = cfg_.hidden;
  Tensor d_feature = Tensor::Zero(1, hidden);
  if (grad.d_logits.size() > 0) {
    d_feature += proxy_.backward(tape, cache.proxy, grad.d_logits, grads);
  }
  if (grad.d_context_feature.size() > 0) d_feature += grad.d_context_feature;

  ContextAttention::Grad ctx_grad;
  ctx_grad.feature = d_feature;
  InteractionAttention::Grad int_grad;
  int_grad.feature = d_feature;
  if (!grad.components.empty()) {
    for (const auto& g : grad.components) {
      ctx_grad.eta.push_back(g.d_eta);
      ctx_grad.beta.push_back(g.d_beta);
      int_grad.V.push_back(g.d_V);
      int_grad.nu.push_back(g.d_nu);
    }
  }
  const PolylineFeatures& f = cache.features;
  PolylineFeatures d = context_.backward(tape, cache.context, ctx_grad,
                                         f.m.rows(), f.o.rows(), grads);
  interaction_.backward(tape, cache.interaction, int_grad, d.e, d.o, grads);
  map_encoder_.backward(tape, cache.map_enc, d.m, grads);
  agent_encoder_.backward(tape, cache.target_enc, d.e, grads);
  agent_encoder_.backward(tape, cache.other_enc, d.o, grads);
  prior_.backward(tape, grad.prior, grads);
}

// ---------------------------------------------------------------------------

GradientReport check_gradients(ParamTape& tape, const LossFn& loss_fn,
                               double tolerance, std::size_t samples,
                               std::uint64_t seed) {
  constexpr double kStep = 1e-5;
  GradientReport report;
  GradBuffer analytic = tape.make_grad_buffer();
  loss_fn(tape, &analytic);

  std::vector<std::size_t> indices(tape.size());
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(std::min(samples, indices.size()));
  std::sort(indices.begin(), indices.end());

  auto values = tape.values();
  for (std::size_t idx : indices) {
    const double original = values[idx];
    values[idx] = original + kStep;
    const double plus = loss_fn(tape, nullptr);
    values[idx] = original - kStep;
    const double minus = loss_fn(tape, nullptr);
    values[idx] = original;
    const double numeric = (plus - minus) / (2.0 * kStep);
    const double a = analytic[idx];
    const double rel =
        std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-8);
    ++report.checked;
    if (rel > tolerance) ++report.failures;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = idx;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.failures == 0;
  return report;
}

}  // namespace gneva
