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

#include "gneva/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "gneva/errors.hpp"

namespace gneva {

ParamTape::ParamTape(std::uint64_t rng_seed)
    : rng_seed_(rng_seed), init_rng_(rng_seed) {}

ParamSlot ParamTape::add(std::string name, Eigen::Index rows,
                         Eigen::Index cols) {
  if (index_.contains(name)) {
    throw ValidationError("ParamTape: duplicate parameter '" + name + "'");
  }
  ParamSlot s{values_.size(), rows, cols};
  values_.resize(values_.size() + s.size(), 0.0);
  grads_.resize(values_.size(), 0.0);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), s});
  return s;
}

ParamSlot ParamTape::slot(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ValidationError("ParamTape: unknown parameter '" +
                          std::string(name) + "'");
  }
  return entries_[it->second].slot;
}

bool ParamTape::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

TensorMap ParamTape::view(const ParamSlot& s) {
  return TensorMap(values_.data() + s.offset, s.rows, s.cols);
}

ConstTensorMap ParamTape::view(const ParamSlot& s) const {
  return ConstTensorMap(values_.data() + s.offset, s.rows, s.cols);
}

void ParamTape::zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace gneva
