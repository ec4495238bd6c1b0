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

#ifndef GNEVA_ENCODERS_HPP_
#define GNEVA_ENCODERS_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "gneva/dataio.hpp"
#include "gneva/encoder_config.hpp"
#include "gneva/layers.hpp"
#include "gneva/mixture.hpp"
#include "gneva/tensor.hpp"

namespace gneva {

// Shared per-vector MLP followed by a max-pool over each polyline's vectors.
class PolylineEncoder {
 public:
  struct Cache {
    Mlp::Cache mlp;
    std::vector<Eigen::Index> row_offsets;  // first row of each polyline
    Eigen::MatrixXi argmax;                 // polylines x hidden
    Eigen::Index total_rows = 0;
  };

  PolylineEncoder() = default;
  // `input_scale` multiplies every input vector column-wise.
  PolylineEncoder(ParamTape& tape, const std::string& name,
                  Eigen::RowVectorXd input_scale, Eigen::Index hidden);

  // One output row per polyline. Throws ShapeMismatch when an input width
  // differs from input_scale.size() or a polyline has no vectors.
  Tensor forward(const ParamTape& tape, const std::vector<const Tensor*>& polylines,
                 Cache* cache) const;
  void backward(const ParamTape& tape, const Cache& cache, const Tensor& dy,
                GradBuffer& grads) const;

 private:
  Mlp mlp_;
  Eigen::RowVectorXd input_scale_;
};

struct PolylineFeatures {
  Tensor m;  // map features, one row per map polyline
  Tensor e;  // target history feature, 1 row
  Tensor o;  // surrounding history features, one row per agent
};

struct ContextOutput {
  Tensor feature;  // 1 x hidden, target row after the attention stack
  std::vector<Vec2> eta;
  std::vector<double> beta;
};

// Self-attention stack over [m; e; o], target row extracted, MLP head
// emitting eta (C x 2, meters) and beta = softplus(raw) + 1e-3.
class ContextAttention {
 public:
  struct Cache {
    std::vector<SelfAttentionBlock::Cache> blocks;
    Eigen::Index target_row = 0;
    Eigen::Index rows = 0;
    Mlp::Cache head;
    Tensor raw;  // 1 x 3C
  };
  struct Grad {
    Tensor feature;  // may be empty
    std::vector<Vec2> eta;
    std::vector<double> beta;
  };

  ContextAttention() = default;
  ContextAttention(ParamTape& tape, const EncoderConfig& cfg);

  ContextOutput forward(const ParamTape& tape, const PolylineFeatures& f,
                        Cache* cache) const;
  // Returns gradients with respect to m, e and o (packed like forward input).
  PolylineFeatures backward(const ParamTape& tape, const Cache& cache,
                            const Grad& grad, std::size_t map_rows,
                            std::size_t other_rows, GradBuffer& grads) const;

  // Sets the head's output bias so that a zero hidden activation maps
  // component c to anchors[c] (meters). Throws ShapeMismatch unless there
  // is one anchor per component.
  void set_mean_anchors(ParamTape& tape, const std::vector<Vec2>& anchors) const;

 private:
  std::vector<SelfAttentionBlock> blocks_;
  Mlp head_;
  int components_ = 0;
  double coord_scale_ = 1.0;
};

struct InteractionOutput {
  Tensor feature;  // 1 x hidden
  std::vector<SPDMatrix2> V;
  std::vector<Cholesky2> V_chol;
  std::vector<double> nu;
};

// Self-attention stack over [e; o restricted to mask], target row extracted,
// MLP head emitting Cholesky factors (softplus + 1e-3 diagonal, scaled by
// 1/coord_scale) and nu = 3 + softplus(raw).
class InteractionAttention {
 public:
  struct Cache {
    std::vector<SelfAttentionBlock::Cache> blocks;
    std::vector<std::size_t> kept;  // indices into o that passed the mask
    Mlp::Cache head;
    Tensor raw;  // 1 x 4C
  };
  struct Grad {
    Tensor feature;
    std::vector<Mat2> V;  // symmetric gradient w.r.t. each V
    std::vector<double> nu;
  };

  InteractionAttention() = default;
  InteractionAttention(ParamTape& tape, const EncoderConfig& cfg);

  InteractionOutput forward(const ParamTape& tape, const Tensor& e,
                            const Tensor& o, const std::vector<bool>& mask,
                            Cache* cache) const;
  // Accumulates into de and do_ (do_ rows correspond to all of o).
  void backward(const ParamTape& tape, const Cache& cache, const Grad& grad,
                Tensor& de, Tensor& do_, GradBuffer& grads) const;

 private:
  std::vector<SelfAttentionBlock> blocks_;
  Mlp head_;
  int components_ = 0;
  double coord_scale_ = 1.0;
};

// MLP followed by softmax over the C components.
class ZProxy {
 public:
  struct Cache {
    Mlp::Cache mlp;
  };

  ZProxy() = default;
  ZProxy(ParamTape& tape, const EncoderConfig& cfg);

  // Returns the logits; weights are softmax(logits).
  Tensor logits(const ParamTape& tape, const Tensor& context_feature,
                Cache* cache) const;
  Tensor backward(const ParamTape& tape, const Cache& cache,
                  const Tensor& d_logits, GradBuffer& grads) const;

 private:
  Mlp mlp_;
};

std::vector<double> softmax(const Tensor& logits);

// Trainable prior parameters (eta0, beta0, V0, nu0) with the same
// constraint layers as the posterior heads.
class PriorParams {
 public:
  PriorParams() = default;
  // Initializes to eta0 = 0, beta0 = 1, V0 = 0.1 I, nu0 = 4.
  explicit PriorParams(ParamTape& tape);

  NormalWishartParams value(const ParamTape& tape) const;
  // Inverts the constraint layers so that value() returns `p` (diagonal
  // Cholesky entries are clamped to stay above the 1e-3 floor).
  void set_value(ParamTape& tape, const NormalWishartParams& p) const;
  void backward(const ParamTape& tape, const NormalWishartGradient& grad,
                GradBuffer& grads) const;

 private:
  ParamSlot eta_, beta_raw_, chol_raw_, nu_raw_;
};

// Everything the spatial model emits for one scene.
struct SpatialOutput {
  MixturePosterior mixture;
  std::vector<double> weights;  // z-proxy output
  Tensor logits;
  Tensor context_feature;  // context row + interaction row
  NormalWishartParams prior;
};

// Gradients of a scalar with respect to the spatial outputs.
struct SpatialOutputGrad {
  std::vector<NormalWishartGradient> components;
  NormalWishartGradient prior;
  Tensor d_logits;           // 1 x C, may be empty
  Tensor d_context_feature;  // 1 x hidden, may be empty
};

// Map/agent polyline encoders, the two attention modules, the z-proxy
// head and the trainable prior, all registered on one ParamTape.
class SpatialModel {
 public:
  struct Cache {
    PolylineEncoder::Cache map_enc, target_enc, other_enc;
    PolylineFeatures features;
    ContextAttention::Cache context;
    InteractionAttention::Cache interaction;
    ZProxy::Cache proxy;
    ContextOutput context_out;
    InteractionOutput interaction_out;
  };

  // Registers (and initializes) all parameters on `tape`.
  SpatialModel(ParamTape& tape, const EncoderConfig& cfg);

  const EncoderConfig& config() const { return cfg_; }

  PolylineFeatures encode_polylines(const ParamTape& tape,
                                    const VectorizedScene& scene,
                                    Cache* cache) const;
  SpatialOutput forward(const ParamTape& tape, const VectorizedScene& scene,
                        Cache* cache) const;
  void backward(const ParamTape& tape, const Cache& cache,
                const SpatialOutputGrad& grad, GradBuffer& grads) const;

  // See ContextAttention::set_mean_anchors.
  void set_mean_anchors(ParamTape& tape, const std::vector<Vec2>& anchors) const {
    context_.set_mean_anchors(tape, anchors);
  }

  const ContextAttention& context_attention() const { return context_; }
  const InteractionAttention& interaction_attention() const {
    return interaction_;
  }
  const ZProxy& z_proxy() const { return proxy_; }
  const PriorParams& prior() const { return prior_; }
  void set_prior(ParamTape& tape, const NormalWishartParams& p) const {
    prior_.set_value(tape, p);
  }

 private:
  EncoderConfig cfg_;
  PolylineEncoder map_encoder_;
  PolylineEncoder agent_encoder_;
  ContextAttention context_;
  InteractionAttention interaction_;
  ZProxy proxy_;
  PriorParams prior_;
};

// Chain rule from a symmetric gradient on V = L L^T to the lower-triangular
// entries (l11, l21, l22) of L.
std::array<double, 3> cholesky_backward(const Cholesky2& chol, const Mat2& dV);

struct GradientReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t failures = 0;  // entries above tolerance
  bool passed = false;
};

// Loss function for gradient checks. With a non-null buffer the function
// also accumulates its analytic gradient into it.
using LossFn = std::function<double(const ParamTape&, GradBuffer*)>;

// Central finite differences (h = 1e-5) against the accumulated gradient on
// a random subset of at least min(200, size) parameters; relative error is
// |a - n| / (|a| + |n| + 1e-8).
GradientReport check_gradients(ParamTape& tape, const LossFn& loss_fn,
                               double tolerance, std::size_t samples = 200,
                               std::uint64_t seed = 0);

}  // namespace gneva

#endif  // GNEVA_ENCODERS_HPP_
