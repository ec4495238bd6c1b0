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

#ifndef GNEVA_TENSOR_HPP_
#define GNEVA_TENSOR_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "gneva/distributions.hpp"

namespace gneva {

// Row-major dense feature map; rows index tokens, columns index channels.
using Tensor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using TensorMap = Eigen::Map<Tensor>;
using ConstTensorMap = Eigen::Map<const Tensor>;

// Flat gradient accumulator laid out exactly like ParamTape::values().
using GradBuffer = std::vector<double>;

struct ParamSlot {
  std::size_t offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

// Named trainable parameters stored contiguously with a matching gradient
// buffer. Slots stay valid for the lifetime of the tape; spans and maps are
// invalidated by add().
class ParamTape {
 public:
  struct Entry {
    std::string name;
    ParamSlot slot;
  };

  explicit ParamTape(std::uint64_t rng_seed = 0);

  // Registers a zero-initialized parameter. Throws ValidationError when the
  // name is already taken.
  ParamSlot add(std::string name, Eigen::Index rows, Eigen::Index cols);
  ParamSlot slot(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  GradBuffer& grads() { return grads_; }
  const GradBuffer& grads() const { return grads_; }

  TensorMap view(const ParamSlot& s);
  ConstTensorMap view(const ParamSlot& s) const;

  void zero_grads();
  GradBuffer make_grad_buffer() const { return GradBuffer(values_.size()); }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return values_.size(); }
  std::uint64_t rng_seed() const { return rng_seed_; }
  // Generator used for parameter initialization, seeded from rng_seed.
  Rng& init_rng() { return init_rng_; }

 private:
  std::vector<double> values_;
  GradBuffer grads_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t rng_seed_;
  Rng init_rng_;
};

inline TensorMap grad_view(GradBuffer& g, const ParamSlot& s) {
  return TensorMap(g.data() + s.offset, s.rows, s.cols);
}

// Elementwise helpers shared by the constraint layers.
double softplus(double x);
double sigmoid(double x);

}  // namespace gneva

#endif  // GNEVA_TENSOR_HPP_
