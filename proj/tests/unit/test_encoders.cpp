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


#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gneva/encoders.hpp"
#include "gneva/errors.hpp"
#include "gneva/model_io.hpp"
#include "gneva/synth.hpp"
#include "gneva/verify/suites.hpp"

namespace gneva {
namespace {

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.hidden = 32;
  cfg.n_heads = 4;
  cfg.context_layers = 2;
  cfg.components = 3;
  return cfg;
}

VectorizedScene merge_scene(const EncoderConfig& cfg, std::uint64_t seed = 21) {
  SynthConfig sc;
  sc.n = 1;
  sc.seed = seed;
  const auto world = synth_generate(sc, SceneKind::kMerge);
  return vectorize(to_target_frame(world.front()), cfg);
}

Tensor random_tensor(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return t;
}

void randomize(ParamTape& tape, Rng& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  for (double& v : tape.values()) v = n(rng);
}

double dot(const Tensor& a, const Tensor& b) { return (a.array() * b.array()).sum(); }

TEST(EncodePolylines, EmptySurroundingSetLeavesOtherFeaturesAlone) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(1);
  const SpatialModel model(tape, cfg);
  VectorizedScene scene = merge_scene(cfg);
  ASSERT_FALSE(scene.others.empty());
  const auto full = model.encode_polylines(tape, scene, nullptr);

  scene.others.clear();
  scene.others_observed_at_horizon.clear();
  scene.other_ids.clear();
  const auto bare = model.encode_polylines(tape, scene, nullptr);
  EXPECT_EQ(bare.o.rows(), 0);
  EXPECT_EQ(bare.m, full.m);
  EXPECT_EQ(bare.e, full.e);
  EXPECT_NO_THROW(model.forward(tape, scene, nullptr));
}

TEST(EncodePolylines, DuplicatedPolylineDuplicatesItsRow) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(2);
  const SpatialModel model(tape, cfg);
  VectorizedScene scene = merge_scene(cfg);
  scene.map_polylines.push_back(scene.map_polylines.front());
  const auto f = model.encode_polylines(tape, scene, nullptr);
  EXPECT_EQ(f.m.row(f.m.rows() - 1), f.m.row(0));
}

TEST(EncodePolylines, PoolingIgnoresVectorOrder) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(3);
  const SpatialModel model(tape, cfg);
  VectorizedScene scene = merge_scene(cfg);
  const auto before = model.encode_polylines(tape, scene, nullptr);
  scene.target = scene.target.colwise().reverse().eval();
  Tensor& lane = scene.map_polylines.front();
  lane = lane.colwise().reverse().eval();
  const auto after = model.encode_polylines(tape, scene, nullptr);
  EXPECT_EQ(after.e, before.e);
  EXPECT_EQ(after.m, before.m);
}

TEST(EncodePolylines, RejectsWrongAttributeWidth) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(4);
  const SpatialModel model(tape, cfg);
  VectorizedScene scene = merge_scene(cfg);
  scene.map_polylines.front() = Tensor::Zero(2, kMapVectorWidth + 1);
  EXPECT_THROW(model.encode_polylines(tape, scene, nullptr), ShapeMismatch);
}

TEST(SelfAttentionBlock, SingleRowIsLayerNormalized) {
  ParamTape tape(5);
  const SelfAttentionBlock block(tape, "block", 64, 4);
  Rng rng(5);
  const Tensor y = block.forward(tape, random_tensor(1, 64, rng), nullptr);
  EXPECT_NEAR(y.mean(), 0.0, 1e-12);
  EXPECT_NEAR((y.array() - y.mean()).square().mean(), 1.0, 1e-4);
}

TEST(SelfAttentionBlock, ZeroWeightsReduceToLayerNorm) {
  ParamTape tape(6);
  const SelfAttentionBlock block(tape, "block", 64, 4);
  for (const char* name : {"block.mha.wq.weight", "block.mha.wk.weight", "block.mha.wv.weight"}) {
    tape.view(tape.slot(name)).setZero();
  }
  ParamTape norm_tape;
  const LayerNorm norm(norm_tape, "norm", 64);
  Rng rng(6);
  const Tensor x = random_tensor(7, 64, rng);
  EXPECT_TRUE(block.forward(tape, x, nullptr).isApprox(norm.forward(norm_tape, x, nullptr), 1e-14));
}

TEST(SelfAttentionBlock, GradientMatchesFiniteDifferences) {
  ParamTape tape(7);
  const SelfAttentionBlock block(tape, "block", 64, 4);
  Rng rng(7);
  const Tensor x = random_tensor(5, 64, rng);
  const Tensor w = random_tensor(5, 64, rng);
  const auto report = check_gradients(
      tape,
      [&](const ParamTape& t, GradBuffer* g) {
        SelfAttentionBlock::Cache cache;
        const Tensor y = block.forward(t, x, g ? &cache : nullptr);
        if (g) block.backward(t, cache, w, *g);
        return dot(y, w);
      },
      1e-4, 200, 7);
  EXPECT_GE(report.checked, 200u);
  EXPECT_LT(report.max_relative_error, 1e-4)
      << "analytic " << report.worst_analytic << " numeric " << report.worst_numeric;
}

TEST(ContextAttention, PositiveBetaForAnyParameters) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(8);
  const ContextAttention context(tape, cfg);
  Rng rng(8);
  for (double sd : {0.1, 3.0, 30.0}) {
    randomize(tape, rng, sd);
    const PolylineFeatures f{random_tensor(4, cfg.hidden, rng), random_tensor(1, cfg.hidden, rng),
                             random_tensor(2, cfg.hidden, rng)};
    const auto out = context.forward(tape, f, nullptr);
    ASSERT_EQ(out.beta.size(), 3u);
    for (double b : out.beta) {
      EXPECT_TRUE(std::isfinite(b));
      EXPECT_GT(b, 0.0);
    }
    const auto again = context.forward(tape, f, nullptr);
    EXPECT_EQ(again.feature, out.feature);
    EXPECT_EQ(again.beta, out.beta);
  }
}

TEST(ContextAttention, GradientMatchesFiniteDifferences) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(9);
  const ContextAttention context(tape, cfg);
  Rng rng(9);
  const PolylineFeatures f{random_tensor(4, cfg.hidden, rng), random_tensor(1, cfg.hidden, rng),
                           random_tensor(2, cfg.hidden, rng)};
  const Tensor w = random_tensor(1, cfg.hidden, rng);
  const Tensor a = random_tensor(cfg.components, 3, rng);
  const auto report = check_gradients(
      tape,
      [&](const ParamTape& t, GradBuffer* g) {
        ContextAttention::Cache cache;
        const auto out = context.forward(t, f, g ? &cache : nullptr);
        double loss = dot(out.feature, w);
        ContextAttention::Grad grad{w, {}, {}};
        for (int c = 0; c < cfg.components; ++c) {
          loss += a(c, 0) * out.eta[c].x() + a(c, 1) * out.eta[c].y() +
                  a(c, 2) * std::log(out.beta[c]);
          grad.eta.emplace_back(a(c, 0), a(c, 1));
          grad.beta.push_back(a(c, 2) / out.beta[c]);
        }
        if (g) context.backward(t, cache, grad, 4, 2, *g);
        return loss;
      },
      1e-4, 200, 9);
  EXPECT_LT(report.max_relative_error, 1e-4)
      << "analytic " << report.worst_analytic << " numeric " << report.worst_numeric;
}

TEST(ContextAttention, MeanAnchorsSetHeadBias) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(10);
  const ContextAttention context(tape, cfg);
  tape.view(tape.slot("context.head.output.weight")).setZero();
  const std::vector<Vec2> anchors{{20.0, 0.0}, {15.0, 8.0}, {15.0, -8.0}};
  context.set_mean_anchors(tape, anchors);
  Rng rng(10);
  const PolylineFeatures f{random_tensor(2, cfg.hidden, rng), random_tensor(1, cfg.hidden, rng),
                           Tensor(0, cfg.hidden)};
  const auto out = context.forward(tape, f, nullptr);
  for (int c = 0; c < 3; ++c) EXPECT_TRUE(out.eta[c].isApprox(anchors[c], 1e-12));
  EXPECT_THROW(context.set_mean_anchors(tape, {{1.0, 1.0}}), ShapeMismatch);
}

TEST(InteractionAttention, MaskedRowsHaveNoInfluence) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(11);
  const InteractionAttention interaction(tape, cfg);
  Rng rng(11);
  const Tensor e = random_tensor(1, cfg.hidden, rng);
  const Tensor o = random_tensor(3, cfg.hidden, rng);
  Tensor kept(2, cfg.hidden);
  kept.row(0) = o.row(0);
  kept.row(1) = o.row(2);
  const auto masked = interaction.forward(tape, e, o, {true, false, true}, nullptr);
  const auto removed = interaction.forward(tape, e, kept, {true, true}, nullptr);
  Tensor zeroed = o;
  zeroed.row(1).setZero();
  const auto zero_row = interaction.forward(tape, e, zeroed, {true, false, true}, nullptr);
  EXPECT_EQ(masked.feature, removed.feature);
  EXPECT_EQ(masked.nu, removed.nu);
  EXPECT_EQ(zero_row.feature, masked.feature);
  for (int c = 0; c < cfg.components; ++c) EXPECT_EQ(masked.V[c], removed.V[c]);
}

TEST(InteractionAttention, PrecisionHeadsAlwaysValid) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(12);
  const InteractionAttention interaction(tape, cfg);
  Rng rng(12);
  for (double sd : {0.1, 3.0, 30.0}) {
    randomize(tape, rng, sd);
    const auto out = interaction.forward(tape, random_tensor(1, cfg.hidden, rng),
                                         random_tensor(3, cfg.hidden, rng),
                                         {true, true, false}, nullptr);
    for (int c = 0; c < cfg.components; ++c) {
      EXPECT_GT(out.nu[c], 3.0);
      EXPECT_TRUE(is_positive_definite(out.V[c].a11(), out.V[c].a12(), out.V[c].a22()));
    }
  }
}

TEST(InteractionAttention, GradientMatchesFiniteDifferences) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(13);
  const InteractionAttention interaction(tape, cfg);
  Rng rng(13);
  const Tensor e = random_tensor(1, cfg.hidden, rng);
  const Tensor o = random_tensor(3, cfg.hidden, rng);
  const Tensor w = random_tensor(1, cfg.hidden, rng);
  std::vector<Mat2> s;
  for (int c = 0; c < cfg.components; ++c) {
    const Tensor r = random_tensor(2, 2, rng);
    s.push_back(Mat2(r + r.transpose()) * 0.5);
  }
  const Tensor a = random_tensor(1, cfg.components, rng);
  const auto report = check_gradients(
      tape,
      [&](const ParamTape& t, GradBuffer* g) {
        InteractionAttention::Cache cache;
        const auto out = interaction.forward(t, e, o, {true, false, true}, g ? &cache : nullptr);
        double loss = dot(out.feature, w);
        InteractionAttention::Grad grad{w, {}, {}};
        for (int c = 0; c < cfg.components; ++c) {
          loss += (s[c] * out.V[c].matrix()).trace() + a(0, c) * out.nu[c];
          grad.V.push_back(s[c]);
          grad.nu.push_back(a(0, c));
        }
        if (g) {
          Tensor de = Tensor::Zero(1, cfg.hidden), d_o = Tensor::Zero(3, cfg.hidden);
          interaction.backward(t, cache, grad, de, d_o, *g);
        }
        return loss;
      },
      1e-4, 200, 13);
  EXPECT_LT(report.max_relative_error, 1e-4)
      << "analytic " << report.worst_analytic << " numeric " << report.worst_numeric;
}

TEST(ZProxy, OutputsSimplex) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(14);
  const ZProxy proxy(tape, cfg);
  Rng rng(14);
  const auto w = softmax(proxy.logits(tape, random_tensor(1, cfg.hidden, rng, 5.0), nullptr));
  double sum = 0.0;
  for (double v : w) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-10);

  for (double& v : tape.values()) v = 0.0;
  const auto uniform = softmax(proxy.logits(tape, random_tensor(1, cfg.hidden, rng), nullptr));
  for (double v : uniform) EXPECT_NEAR(v, 1.0 / cfg.components, 1e-15);
}

TEST(ZProxy, GradientMatchesFiniteDifferences) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(15);
  const ZProxy proxy(tape, cfg);
  Rng rng(15);
  const Tensor x = random_tensor(1, cfg.hidden, rng);
  const std::vector<double> target{0.2, 0.5, 0.3};
  const auto report = check_gradients(
      tape,
      [&](const ParamTape& t, GradBuffer* g) {
        ZProxy::Cache cache;
        const Tensor logits = proxy.logits(t, x, g ? &cache : nullptr);
        const auto w = softmax(logits);
        double ce = 0.0;
        Tensor d(1, cfg.components);
        for (int c = 0; c < cfg.components; ++c) {
          ce -= target[c] * std::log(w[c]);
          d(0, c) = w[c] - target[c];
        }
        if (g) proxy.backward(t, cache, d, *g);
        return ce;
      },
      1e-4, 200, 15);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(CheckGradients, QuadraticLossIsExact) {
  ParamTape tape;
  const auto slot = tape.add("w", 16, 1);
  tape.add("unused", 4, 1);
  Rng rng(16);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (double& v : tape.values()) v = u(rng);
  const auto report = check_gradients(
      tape,
      [&](const ParamTape& t, GradBuffer* g) {
        const auto w = t.view(slot);
        if (g) grad_view(*g, slot) += w;
        return 0.5 * w.squaredNorm();
      },
      1e-9, 200, 16);
  EXPECT_EQ(report.checked, 20u);
  EXPECT_LT(report.max_relative_error, 1e-9);
  EXPECT_TRUE(report.passed);

  // The unused parameter is the trailing block of the tape.
  GradBuffer g = tape.make_grad_buffer();
  for (double& v : g) v = 0.0;
  grad_view(g, slot) += tape.view(slot);
  for (std::size_t i = slot.size(); i < tape.size(); ++i) EXPECT_LT(std::abs(g[i]), 1e-10);
}

TEST(SpatialModel, ComposedLossGradient) {
  const auto result = verify::spatial_gradient({});
  EXPECT_TRUE(result.passed) << result.detail;
}

TEST(SpatialModel, SurroundingAgentOrderDoesNotMatter) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(17);
  const SpatialModel model(tape, cfg);
  for (std::uint64_t seed : {31u, 32u, 33u, 34u, 35u}) {
    VectorizedScene scene = merge_scene(cfg, seed);
    scene.others.push_back(scene.target);
    scene.others_observed_at_horizon.push_back(true);
    scene.other_ids.push_back("copy");
    const auto before = model.forward(tape, scene, nullptr);
    std::reverse(scene.others.begin(), scene.others.end());
    std::vector<bool> flags(scene.others_observed_at_horizon.rbegin(),
                            scene.others_observed_at_horizon.rend());
    scene.others_observed_at_horizon = flags;
    std::reverse(scene.other_ids.begin(), scene.other_ids.end());
    const auto after = model.forward(tape, scene, nullptr);
    for (int c = 0; c < cfg.components; ++c) {
      const auto& p = before.mixture.components[c];
      const auto& q = after.mixture.components[c];
      EXPECT_TRUE(p.eta.isApprox(q.eta, 1e-12));
      EXPECT_NEAR(p.beta, q.beta, 1e-12 * p.beta);
      EXPECT_NEAR(p.nu, q.nu, 1e-12 * p.nu);
      EXPECT_TRUE(p.V.matrix().isApprox(q.V.matrix(), 1e-12));
      EXPECT_NEAR(before.weights[c], after.weights[c], 1e-12);
    }
  }
}

TEST(SpatialModel, DeterministicAndValidForAnyParameters) {
  const EncoderConfig cfg = small_config();
  ParamTape a(18), b(18);
  const SpatialModel model_a(a, cfg), model_b(b, cfg);
  const VectorizedScene scene = merge_scene(cfg);
  const auto x = model_a.forward(a, scene, nullptr);
  const auto y = model_b.forward(b, scene, nullptr);
  EXPECT_EQ(x.logits, y.logits);
  EXPECT_EQ(x.context_feature, y.context_feature);

  Rng rng(18);
  for (double sd : {0.5, 5.0}) {
    randomize(a, rng, sd);
    const auto out = model_a.forward(a, scene, nullptr);
    EXPECT_NO_THROW(out.mixture.validate());
    EXPECT_NO_THROW(out.prior.validate());
    for (const auto& comp : out.mixture.components) EXPECT_GT(comp.nu, 3.0);
  }
}

TEST(PriorParams, DefaultsAndInverseConstraints) {
  ParamTape tape;
  const PriorParams prior(tape);
  const auto init = prior.value(tape);
  EXPECT_EQ(init.eta, Vec2::Zero());
  EXPECT_NEAR(init.beta, 1.0, 1e-12);
  EXPECT_NEAR(init.nu, 4.0, 1e-12);
  EXPECT_TRUE(init.V.matrix().isApprox(0.1 * Mat2::Identity(), 1e-12));

  NormalWishartParams p;
  p.eta = Vec2(3.0, -4.0);
  p.beta = 0.05;
  p.V = SPDMatrix2(0.2, 0.05, 0.1);
  p.nu = 6.5;
  prior.set_value(tape, p);
  const auto back = prior.value(tape);
  EXPECT_TRUE(back.eta.isApprox(p.eta, 1e-14));
  EXPECT_NEAR(back.beta, p.beta, 1e-12);
  EXPECT_NEAR(back.nu, p.nu, 1e-12);
  EXPECT_TRUE(back.V.matrix().isApprox(p.V.matrix(), 1e-12));
}

TEST(ModelIo, RoundTripPreservesOutputs) {
  const EncoderConfig cfg = small_config();
  SpatialBundle bundle(cfg, 19);
  const VectorizedScene scene = merge_scene(cfg);
  const std::string text = model_to_json_text("spatial", cfg, bundle.tape);
  const SpatialBundle loaded = spatial_from_json_text(text);
  EXPECT_EQ(loaded.model.forward(loaded.tape, scene, nullptr).logits,
            bundle.model.forward(bundle.tape, scene, nullptr).logits);
  EXPECT_EQ(model_to_json_text("spatial", cfg, loaded.tape), text);

  auto doc = nlohmann::json::parse(text);
  EXPECT_EQ(doc["format_version"], 1);
  doc["config"]["hidden"] = 64;
  EXPECT_THROW(spatial_from_json_text(doc.dump()), ValidationError);
  EXPECT_THROW(trajectory_from_json_text(text), ValidationError);
}

TEST(EncoderConfig, RejectsIndivisibleHeads) {
  EncoderConfig cfg;
  cfg.n_heads = 3;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = EncoderConfig{};
  cfg.context_layers = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

}  // namespace
}  // namespace gneva
