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


// Extended-precision re-implementation of the spatial training loss. It
// reads parameters from the tape by name and shares no code with the
// production forward pass, so central differences taken on it are free of
// the ~1e-14 roundoff that swamps small gradient entries in double.

#ifndef GNEVA_VERIFY_REFERENCE_LOSS_HPP_
#define GNEVA_VERIFY_REFERENCE_LOSS_HPP_

#include <span>

#include "gneva/dataio.hpp"
#include "gneva/encoder_config.hpp"
#include "gneva/tensor.hpp"

namespace gneva::verify {

struct ReferenceLoss {
  long double loss = 0.0L;
  long double elbo = 0.0L;
  long double ce = 0.0L;
};

// An empty `ce_target` uses the responsibilities computed in the same pass,
// matching the production default.
ReferenceLoss reference_spatial_loss(const EncoderConfig& cfg,
                                     const ParamTape& tape,
                                     const VectorizedScene& scene,
                                     const Vec2& goal, double ce_weight,
                                     std::span<const double> ce_target = {});

long double digamma_ld(long double x);

}  // namespace gneva::verify

#endif  // GNEVA_VERIFY_REFERENCE_LOSS_HPP_
