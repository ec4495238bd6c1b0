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


// Seeded oracle suites shared by `gneva verify` and the acceptance binary.
// Every threshold is an explicit field so callers pin their own values.

#ifndef GNEVA_VERIFY_SUITES_HPP_
#define GNEVA_VERIFY_SUITES_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace gneva::verify {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct McSuiteOptions {
  int pairs = 20;
  std::size_t samples = 1'000'000;
  double max_z = 3.0;
  std::uint64_t seed = 11;
};
SuiteResult closed_form_vs_mc(const McSuiteOptions& opt);

struct ElboSuiteOptions {
  int instances = 100;
  double bound_slack = 1e-9;
  double tight_tolerance = 1e-8;
  std::uint64_t seed = 12;
};
SuiteResult elbo_bound(const ElboSuiteOptions& opt);

struct GradientSuiteOptions {
  std::size_t parameters = 200;
  double tolerance = 1e-4;
  // The extended-precision forward must agree with the production forward.
  double forward_tolerance = 1e-10;
  std::uint64_t seed = 13;
};
SuiteResult spatial_gradient(const GradientSuiteOptions& opt);

struct NmsSuiteOptions {
  int pools = 500;
  int max_pool = 64;
  std::uint64_t seed = 14;
};
SuiteResult nms_equivalence(const NmsSuiteOptions& opt);

struct NormalizationSuiteOptions {
  int mixtures = 10;
  double scale_lengths = 40.0;
  double mass_tolerance = 1e-2;
  double large_df = 1e6;
  int gaussian_points = 10;
  double gaussian_tolerance = 1e-3;
  std::uint64_t seed = 15;
};
SuiteResult predictive_normalization(const NormalizationSuiteOptions& opt);

struct GeometrySuiteOptions {
  double expected_unit_iou = 0.2430;  // r = 1, d = 1
  double tolerance = 1e-3;
  std::size_t samples = 4'000'000;
  std::uint64_t seed = 16;
};
SuiteResult circle_geometry(const GeometrySuiteOptions& opt);

// All suites at full size, or with reduced sample counts when `fast`.
std::vector<SuiteResult> run_all_suites(bool fast);

}  // namespace gneva::verify

#endif  // GNEVA_VERIFY_SUITES_HPP_
