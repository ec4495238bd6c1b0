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

#ifndef GNEVA_ENCODER_CONFIG_HPP_
#define GNEVA_ENCODER_CONFIG_HPP_

namespace gneva {

struct EncoderConfig {
  int hidden = 128;
  int n_heads = 4;
  int context_layers = 3;      // L_c
  int interaction_layers = 1;  // L_i
  int components = 6;          // C
  int max_polylines = 64;
  int max_vectors_per_polyline = 32;
  // Fixed length scale (meters) applied to encoder inputs and to the mean
  // and precision heads.
  double coord_scale = 10.0;
  // Number of predicted waypoints produced by the trajectory network.
  int future_steps = 30;

  // Throws ValidationError on non-positive sizes or hidden % n_heads != 0.
  void validate() const;
};

}  // namespace gneva

#endif  // GNEVA_ENCODER_CONFIG_HPP_
