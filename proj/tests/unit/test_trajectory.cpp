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


#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gneva/errors.hpp"
#include "gneva/model_io.hpp"
#include "gneva/synth.hpp"
#include "gneva/training.hpp"
#include "gneva/trajectory.hpp"

namespace gneva {
namespace {

EncoderConfig small_config(int components = 3) {
  EncoderConfig cfg;
  cfg.hidden = 32;
  cfg.context_layers = 2;
  cfg.components = components;
  return cfg;
}

std::vector<Scenario> scenes(SceneKind kind, int n, std::uint64_t seed) {
  SynthConfig sc;
  sc.n = n;
  sc.seed = seed;
  return synth_generate(sc, kind);
}

TEST(CompleteTrajectory, EndsExactlyAtGoal) {
  const EncoderConfig cfg = small_config();
  ParamTape tape(1);
  const TrajectoryNet net(tape, cfg);
  Rng rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor feature(1, cfg.hidden);
  for (Eigen::Index i = 0; i < feature.size(); ++i) feature.data()[i] = n(rng);
  for (const Vec2 goal : {Vec2(25.0, 0.3), Vec2(12.0, -9.5), Vec2(0.0, 0.0)}) {
    const auto w = net.forward(tape, feature, goal, nullptr);
    ASSERT_EQ(w.size(), static_cast<std::size_t>(cfg.future_steps));
    EXPECT_EQ(w.back(), goal);
    EXPECT_EQ(net.forward(tape, feature, goal, nullptr), w);
  }
}

TEST(CompleteTrajectory, LossGradientMatchesFiniteDifferences) {
  const EncoderConfig cfg = small_config();
  ParamTape spatial_tape(2);
  const SpatialModel model(spatial_tape, cfg);
  const auto data = make_trajectory_examples(scenes(SceneKind::kTurn, 1, 2), model, spatial_tape);
  ParamTape tape(3);
  const TrajectoryNet net(tape, cfg);
  const auto report = check_gradients(
      tape,
      [&](const ParamTape& t, GradBuffer* g) { return trajectory_loss(net, t, data[0], g); },
      1e-4, 200, 3);
  EXPECT_GE(report.checked, 200u);
  EXPECT_LT(report.max_relative_error, 1e-4)
      << "analytic " << report.worst_analytic << " numeric " << report.worst_numeric;
}

TEST(CompleteTrajectory, TrainedNetFollowsStraightLanes) {
  const EncoderConfig cfg = small_config();
  ParamTape spatial_tape(4);
  const SpatialModel model(spatial_tape, cfg);
  const auto train =
      make_trajectory_examples(scenes(SceneKind::kStraight, 200, 4), model, spatial_tape);
  const auto test =
      make_trajectory_examples(scenes(SceneKind::kStraight, 20, 1004), model, spatial_tape);
  ParamTape tape(5);
  const TrajectoryNet net(tape, cfg);
  TrainConfig tc;
  tc.max_steps = 300;
  tc.warmup_steps = 30;
  tc.seed = 4;
  train_trajectory(train, net, tape, tc);
  for (const auto& ex : test) {
    const auto w = net.forward(tape, ex.context_feature, ex.goal, nullptr);
    // Distance to the line through the start (origin) and the goal.
    const Vec2 dir = ex.goal.normalized();
    double worst = 0.0;
    for (const auto& p : w) worst = std::max(worst, std::abs(dir.x() * p.y() - dir.y() * p.x()));
    EXPECT_LT(worst, 0.5) << ex.scenario_id;
  }
}

class PredictTopK : public ::testing::Test {
 protected:
  void SetUp() override {
    scenario_ = to_target_frame(scenes(SceneKind::kTurn, 1, 6).front());
  }
  Scenario scenario_;
};

TEST_F(PredictTopK, SingleGoalIsPredictiveMode) {
  const EncoderConfig cfg = small_config(1);
  SpatialBundle spatial(cfg, 6);
  TrajectoryBundle traj(cfg, 7);
  PredictConfig pc;
  pc.nms.k = 1;
  const auto out = predict_topk(scenario_, spatial.model, spatial.tape, traj.net, traj.tape, pc);
  ASSERT_EQ(out.size(), 1u);
  const auto mix = spatial.model.forward(spatial.tape, vectorize(scenario_, cfg), nullptr).mixture;
  const Vec2 mode = mix.components[0].eta;
  EXPECT_LE((out[0].goal - mode).norm(), pc.candidates.spacing * std::sqrt(0.5) + 1e-9);
  EXPECT_EQ(out[0].waypoints.back(), out[0].goal);
}

TEST_F(PredictTopK, SortedSeparatedAndGoalConsistent) {
  const EncoderConfig cfg = small_config();
  SpatialBundle spatial(cfg, 8);
  TrajectoryBundle traj(cfg, 9);
  const PredictConfig pc;
  const auto out = predict_topk(scenario_, spatial.model, spatial.tape, traj.net, traj.tape, pc);
  ASSERT_EQ(out.size(), 6u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_LT((out[i].waypoints.back() - out[i].goal).norm(), 1e-6);
    if (i > 0) {
      EXPECT_LE(out[i].goal_log_prob, out[i - 1].goal_log_prob);
    }
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      EXPECT_GE((out[i].goal - out[j].goal).norm(), 2.0 * pc.nms.radius);
    }
  }
  const auto again = predict_topk(scenario_, spatial.model, spatial.tape, traj.net, traj.tape, pc);
  ASSERT_EQ(again.size(), out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(again[i].goal, out[i].goal);
    EXPECT_EQ(again[i].waypoints, out[i].waypoints);
  }
}

TEST_F(PredictTopK, LengthIsMinOfKAndSurvivors) {
  const EncoderConfig cfg = small_config();
  SpatialBundle spatial(cfg, 10);
  TrajectoryBundle traj(cfg, 11);
  PredictConfig pc;
  // A coarse grid over a small region leaves fewer survivors than k.
  pc.nms.k = 500;
  pc.nms.radius = 6.0;
  pc.candidates.spacing = 2.0;
  pc.candidates.margin = 1.0;
  const auto out = predict_topk(scenario_, spatial.model, spatial.tape, traj.net, traj.tape, pc);
  const auto mix_out = spatial.model.forward(spatial.tape, vectorize(scenario_, cfg), nullptr);
  std::vector<Vec2> centres;
  for (const auto& c : mix_out.mixture.components) centres.push_back(c.eta);
  const auto pool = generate_candidates(mix_out.mixture, mix_out.weights,
                                        scene_region(scenario_, 1.0, centres), 2.0);
  const auto survivors = nms_select(pool, pc.nms);
  ASSERT_LT(survivors.size(), 500u);
  EXPECT_EQ(out.size(), survivors.size());
  pc.nms.k = 3;
  EXPECT_EQ(predict_topk(scenario_, spatial.model, spatial.tape, traj.net, traj.tape, pc).size(),
            3u);
}

TEST_F(PredictTopK, SampleModeAndHorizonCheck) {
  const EncoderConfig cfg = small_config();
  SpatialBundle spatial(cfg, 12);
  TrajectoryBundle traj(cfg, 13);
  PredictConfig pc;
  pc.candidates.mode = CandidateMode::kSample;
  pc.candidates.samples = 512;
  const auto out = predict_topk(scenario_, spatial.model, spatial.tape, traj.net, traj.tape, pc);
  EXPECT_FALSE(out.empty());
  EXPECT_LE(out.size(), 6u);

  Scenario shorter = scenario_;
  shorter.T = 20;
  EXPECT_THROW(predict_topk(shorter, spatial.model, spatial.tape, traj.net, traj.tape, pc),
               HorizonMismatch);
}

TEST(PredictionIo, JsonRoundTripAndWorldFrame) {
  std::vector<PredictedTrajectory> preds(2);
  preds[0] = {Vec2(10.0, 1.0), {Vec2(5.0, 0.5), Vec2(10.0, 1.0)}, -2.5};
  preds[1] = {Vec2(8.0, -6.0), {Vec2(4.0, -3.0), Vec2(8.0, -6.0)}, -3.75};
  const FrameTransform frame{Vec2(100.0, -50.0), 0.7};
  const auto world = to_world_frame(preds, frame);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_TRUE(frame.to_local(world[i].goal).isApprox(preds[i].goal, 1e-12));
  }
  const auto parsed = predictions_from_json_text(predictions_to_json_text("scene-1", world));
  EXPECT_EQ(parsed.scenario_id, "scene-1");
  ASSERT_EQ(parsed.predictions.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(parsed.predictions[i].goal_log_prob, world[i].goal_log_prob);
    EXPECT_EQ(parsed.predictions[i].waypoints, world[i].waypoints);
  }
  EXPECT_THROW(predictions_from_json_text("{\"predictions\": 3}"), ValidationError);
}

}  // namespace
}  // namespace gneva
