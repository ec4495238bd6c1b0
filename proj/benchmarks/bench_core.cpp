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


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gneva/dataio.hpp"
#include "gneva/distributions.hpp"
#include "gneva/mixture.hpp"
#include "gneva/sampling.hpp"
#include "gneva/special_math.hpp"
#include "gneva/synth.hpp"
#include "gneva/training.hpp"

namespace {

using namespace gneva;

void BM_Digamma(benchmark::State& state) {
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(digamma(x));
    x = x < 50.0 ? x + 0.37 : 0.5;
  }
}
BENCHMARK(BM_Digamma);

void BM_LogMultivariateGamma(benchmark::State& state) {
  double x = 1.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_multivariate_gamma(x, 2));
    x = x < 50.0 ? x + 0.37 : 1.5;
  }
}
BENCHMARK(BM_LogMultivariateGamma);

Scenario bench_scene() {
  SynthConfig sc;
  sc.n = 1;
  sc.seed = 3;
  return synth_generate(sc, SceneKind::kTurn).front();
}

// A trained-shape mixture from a freshly initialized model on a turn scene.
struct SceneMixture {
  SceneMixture() : tape(1), model(tape, EncoderConfig{}) {
    const Scenario local = to_target_frame(bench_scene());
    const SpatialOutput out = model.forward(tape, vectorize(local, model.config()), nullptr);
    mix = out.mixture;
    weights = out.weights;
    region = scene_region(local, CandidateConfig{}.margin, {});
  }
  ParamTape tape;
  SpatialModel model;
  MixturePosterior mix;
  std::vector<double> weights;
  Region region;
};

void BM_PredictiveLogDensity(benchmark::State& state) {
  const SceneMixture s;
  Vec2 g(1.0, 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(predictive_log_density(g, s.mix, s.weights));
    g.x() += 1e-3;
  }
}
BENCHMARK(BM_PredictiveLogDensity);

void BM_GenerateCandidates(benchmark::State& state) {
  const SceneMixture s;
  const double spacing = 1.0 / static_cast<double>(state.range(0));
  std::size_t cells = 0;
  for (auto _ : state) {
    const auto c = generate_candidates(s.mix, s.weights, s.region, spacing);
    cells = c.size();
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["cells"] = static_cast<double>(cells);
}
BENCHMARK(BM_GenerateCandidates)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_NmsSelect(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-30.0, 30.0), lp(-20.0, 0.0);
  std::vector<ScoredCandidate> pool(static_cast<std::size_t>(state.range(0)));
  for (auto& c : pool) c = {Vec2(pos(rng), pos(rng)), lp(rng)};
  const NmsConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(nms_select(pool, cfg));
}
BENCHMARK(BM_NmsSelect)->Arg(64)->Arg(4096)->Arg(65536);

void BM_SpatialLossAndGradient(benchmark::State& state) {
  ParamTape tape(2);
  const EncoderConfig cfg;
  const SpatialModel model(tape, cfg);
  const SpatialExample example = make_spatial_example(bench_scene(), cfg);
  GradBuffer grads(tape.size(), 0.0);
  const bool with_grad = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        spatial_loss(model, tape, example, 1.0, with_grad ? &grads : nullptr).loss);
  }
}
BENCHMARK(BM_SpatialLossAndGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
