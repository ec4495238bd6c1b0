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

#include "gneva/layers.hpp"

#include <cmath>
#include <random>

#include "gneva/errors.hpp"

namespace gneva {

Linear::Linear(ParamTape& tape, const std::string& name, Eigen::Index in,
               Eigen::Index out, bool bias)
    : has_bias_(bias) {
  weight_ = tape.add(name + ".weight", in, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> init(-bound, bound);
  TensorMap w = tape.view(weight_);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = init(tape.init_rng());
  if (has_bias_) bias_ = tape.add(name + ".bias", 1, out);
}

Tensor Linear::forward(const ParamTape& tape, const Tensor& x) const {
  if (x.cols() != weight_.rows) {
    throw ShapeMismatch("Linear: input width " + std::to_string(x.cols()) +
                        " != " + std::to_string(weight_.rows));
  }
  Tensor y = x * tape.view(weight_);
  if (has_bias_) y.rowwise() += tape.view(bias_).row(0);
  return y;
}

Tensor Linear::backward(const ParamTape& tape, const Tensor& x,
                        const Tensor& dy, GradBuffer& grads) const {
  grad_view(grads, weight_).noalias() += x.transpose() * dy;
  if (has_bias_) grad_view(grads, bias_).row(0) += dy.colwise().sum();
  return dy * tape.view(weight_).transpose();
}

LayerNorm::LayerNorm(ParamTape& tape, const std::string& name,
                     Eigen::Index dim) {
  gain_ = tape.add(name + ".gain", 1, dim);
  offset_ = tape.add(name + ".offset", 1, dim);
  tape.view(gain_).setOnes();
}

Tensor LayerNorm::forward(const ParamTape& tape, const Tensor& x,
                          Cache* cache) const {
  const Eigen::Index n = x.rows();
  const double width = static_cast<double>(x.cols());
  Tensor normalized(n, x.cols());
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).mean();
    const auto centered = x.row(i).array() - mean;
    const double var = centered.square().sum() / width;
    inv_std(i) = 1.0 / std::sqrt(var + kEpsilon);
    normalized.row(i) = centered * inv_std(i);
  }
  Tensor y = normalized;
  y.array().rowwise() *= tape.view(gain_).row(0).array();
  y.rowwise() += tape.view(offset_).row(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Tensor LayerNorm::backward(const ParamTape& tape, const Cache& cache,
                           const Tensor& dy, GradBuffer& grads) const {
  grad_view(grads, gain_).row(0) +=
      (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  grad_view(grads, offset_).row(0) += dy.colwise().sum();
  Tensor dxhat = dy;
  dxhat.array().rowwise() *= tape.view(gain_).row(0).array();
  const double width = static_cast<double>(dy.cols());
  Tensor dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double sum = dxhat.row(i).sum();
    const double dot = dxhat.row(i).dot(cache.normalized.row(i));
    dx.row(i) = (cache.inv_std(i) / width) *
                (width * dxhat.row(i).array() - sum -
                 cache.normalized.row(i).array() * dot)
                    .matrix();
  }
  return dx;
}

Tensor relu(const Tensor& x) { return x.cwiseMax(0.0); }

Tensor relu_backward(const Tensor& y, const Tensor& dy) {
  return (y.array() > 0.0).select(dy, 0.0);
}

Mlp::Mlp(ParamTape& tape, const std::string& name, Eigen::Index in,
         Eigen::Index hidden, Eigen::Index out)
    : hidden_(tape, name + ".hidden", in, hidden),
      norm_(tape, name + ".norm", hidden),
      output_(tape, name + ".output", hidden, out) {}

Tensor Mlp::forward(const ParamTape& tape, const Tensor& x,
                    Cache* cache) const {
  LayerNorm::Cache norm_cache;
  Tensor h = norm_.forward(tape, hidden_.forward(tape, x), &norm_cache);
  Tensor a = relu(h);
  Tensor y = output_.forward(tape, a);
  if (cache) {
    cache->input = x;
    cache->norm = std::move(norm_cache);
    cache->activated = std::move(a);
  }
  return y;
}

Tensor Mlp::backward(const ParamTape& tape, const Cache& cache,
                     const Tensor& dy, GradBuffer& grads) const {
  Tensor da = output_.backward(tape, cache.activated, dy, grads);
  Tensor dh = relu_backward(cache.activated, da);
  Tensor dz = norm_.backward(tape, cache.norm, dh, grads);
  return hidden_.backward(tape, cache.input, dz, grads);
}

MultiHeadAttention::MultiHeadAttention(ParamTape& tape,
                                       const std::string& name,
                                       Eigen::Index dim, int heads)
    : wq_(tape, name + ".wq", dim, dim, false),
      wk_(tape, name + ".wk", dim, dim, false),
      wv_(tape, name + ".wv", dim, dim, false),
      heads_(heads),
      dim_(dim) {
  if (heads <= 0 || dim % heads != 0) {
    throw ShapeMismatch("MultiHeadAttention: dim must be divisible by heads");
  }
}

Tensor MultiHeadAttention::forward(const ParamTape& tape, const Tensor& x,
                                   Cache* cache) const {
  const Eigen::Index n = x.rows();
  const Eigen::Index dk = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor q = wq_.forward(tape, x);
  Tensor k = wk_.forward(tape, x);
  Tensor v = wv_.forward(tape, x);
  Tensor out(n, dim_);
  std::vector<Tensor> attention;
  attention.reserve(heads_);
  for (int h = 0; h < heads_; ++h) {
    const Eigen::Index c0 = h * dk;
    Tensor scores = scale * q.middleCols(c0, dk) * k.middleCols(c0, dk).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = scores.row(i).maxCoeff();
      scores.row(i) = (scores.row(i).array() - m).exp().matrix();
      scores.row(i) /= scores.row(i).sum();
    }
    out.middleCols(c0, dk).noalias() = scores * v.middleCols(c0, dk);
    attention.push_back(std::move(scores));
  }
  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attention = std::move(attention);
  }
  return out;
}

Tensor MultiHeadAttention::backward(const ParamTape& tape, const Cache& cache,
                                    const Tensor& dy, GradBuffer& grads) const {
  const Eigen::Index n = dy.rows();
  const Eigen::Index dk = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor dq(n, dim_), dk_all(n, dim_), dv(n, dim_);
  for (int h = 0; h < heads_; ++h) {
    const Eigen::Index c0 = h * dk;
    const Tensor& a = cache.attention[h];
    const auto dout = dy.middleCols(c0, dk);
    dv.middleCols(c0, dk).noalias() = a.transpose() * dout;
    Tensor da = dout * cache.v.middleCols(c0, dk).transpose();
    // Softmax backward, row by row.
    Tensor ds(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dot = da.row(i).dot(a.row(i));
      ds.row(i) = (a.row(i).array() * (da.row(i).array() - dot)).matrix();
    }
    ds *= scale;
    dq.middleCols(c0, dk).noalias() = ds * cache.k.middleCols(c0, dk);
    dk_all.middleCols(c0, dk).noalias() =
        ds.transpose() * cache.q.middleCols(c0, dk);
  }
  Tensor dx = wq_.backward(tape, cache.input, dq, grads);
  dx += wk_.backward(tape, cache.input, dk_all, grads);
  dx += wv_.backward(tape, cache.input, dv, grads);
  return dx;
}

SelfAttentionBlock::SelfAttentionBlock(ParamTape& tape,
                                       const std::string& name,
                                       Eigen::Index dim, int heads)
    : attention_(tape, name + ".mha", dim, heads),
      norm_(tape, name + ".norm", dim) {}

Tensor SelfAttentionBlock::forward(const ParamTape& tape, const Tensor& x,
                                   Cache* cache) const {
  MultiHeadAttention::Cache attention_cache;
  Tensor activated =
      relu(attention_.forward(tape, x, cache ? &attention_cache : nullptr));
  Tensor y = norm_.forward(tape, x + activated, cache ? &cache->norm : nullptr);
  if (cache) {
    cache->attention = std::move(attention_cache);
    cache->activated = std::move(activated);
  }
  return y;
}

Tensor SelfAttentionBlock::backward(const ParamTape& tape, const Cache& cache,
                                    const Tensor& dy,
                                    GradBuffer& grads) const {
  Tensor dsum = norm_.backward(tape, cache.norm, dy, grads);
  Tensor dmha = relu_backward(cache.activated, dsum);
  Tensor dx = attention_.backward(tape, cache.attention, dmha, grads);
  dx += dsum;
  return dx;
}

}  // namespace gneva
