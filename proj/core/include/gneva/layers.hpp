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

#ifndef GNEVA_LAYERS_HPP_
#define GNEVA_LAYERS_HPP_

#include <string>
#include <vector>

#include "gneva/tensor.hpp"

namespace gneva {

// Building blocks with hand-written reverse passes. Each layer keeps only
// parameter slots; activations needed by backward() live in a Cache filled
// by forward(). Backward passes accumulate parameter gradients into a
// GradBuffer and return the gradient with respect to the layer input.

class Linear {
 public:
  Linear() = default;
  // Weight in x out, uniform(-1/sqrt(in), 1/sqrt(in)); bias zero.
  Linear(ParamTape& tape, const std::string& name, Eigen::Index in,
         Eigen::Index out, bool bias = true);

  Tensor forward(const ParamTape& tape, const Tensor& x) const;
  Tensor backward(const ParamTape& tape, const Tensor& x, const Tensor& dy,
                  GradBuffer& grads) const;

  Eigen::Index in_features() const { return weight_.rows; }
  Eigen::Index out_features() const { return weight_.cols; }
  const ParamSlot& weight_slot() const { return weight_; }
  // Meaningful only when constructed with a bias.
  const ParamSlot& bias_slot() const { return bias_; }

 private:
  ParamSlot weight_;
  ParamSlot bias_;
  bool has_bias_ = false;
};

class LayerNorm {
 public:
  struct Cache {
    Tensor normalized;
    Eigen::VectorXd inv_std;
  };

  static constexpr double kEpsilon = 1e-5;

  LayerNorm() = default;
  LayerNorm(ParamTape& tape, const std::string& name, Eigen::Index dim);

  Tensor forward(const ParamTape& tape, const Tensor& x, Cache* cache) const;
  Tensor backward(const ParamTape& tape, const Cache& cache, const Tensor& dy,
                  GradBuffer& grads) const;

 private:
  ParamSlot gain_;
  ParamSlot offset_;
};

Tensor relu(const Tensor& x);
// Gradient through ReLU given its forward output.
Tensor relu_backward(const Tensor& y, const Tensor& dy);

// Hidden layer and output layer: W2 ReLU(LayerNorm(W1 x + b1)) + b2.
class Mlp {
 public:
  struct Cache {
    Tensor input;
    LayerNorm::Cache norm;
    Tensor activated;
  };

  Mlp() = default;
  Mlp(ParamTape& tape, const std::string& name, Eigen::Index in,
      Eigen::Index hidden, Eigen::Index out);

  Tensor forward(const ParamTape& tape, const Tensor& x, Cache* cache) const;
  Tensor backward(const ParamTape& tape, const Cache& cache, const Tensor& dy,
                  GradBuffer& grads) const;

  const Linear& output_layer() const { return output_; }

 private:
  Linear hidden_;
  LayerNorm norm_;
  Linear output_;
};

// Multi-head scaled dot-product attention over the rows of X with
// row-wise softmax normalization and no output projection.
class MultiHeadAttention {
 public:
  struct Cache {
    Tensor input;
    Tensor q, k, v;
    std::vector<Tensor> attention;  // one n x n matrix per head
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamTape& tape, const std::string& name,
                     Eigen::Index dim, int heads);

  Tensor forward(const ParamTape& tape, const Tensor& x, Cache* cache) const;
  Tensor backward(const ParamTape& tape, const Cache& cache, const Tensor& dy,
                  GradBuffer& grads) const;

 private:
  Linear wq_, wk_, wv_;
  int heads_ = 1;
  Eigen::Index dim_ = 0;
};

// LayerNorm(X + ReLU(MHA(X))).
class SelfAttentionBlock {
 public:
  struct Cache {
    MultiHeadAttention::Cache attention;
    Tensor activated;
    LayerNorm::Cache norm;
  };

  SelfAttentionBlock() = default;
  SelfAttentionBlock(ParamTape& tape, const std::string& name,
                     Eigen::Index dim, int heads);

  Tensor forward(const ParamTape& tape, const Tensor& x, Cache* cache) const;
  Tensor backward(const ParamTape& tape, const Cache& cache, const Tensor& dy,
                  GradBuffer& grads) const;

 private:
  MultiHeadAttention attention_;
  LayerNorm norm_;
};

}  // namespace gneva

#endif  // GNEVA_LAYERS_HPP_
