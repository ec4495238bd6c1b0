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

#include "gneva/trajectory.hpp"

#include <nlohmann/json.hpp>

#include "gneva/errors.hpp"

namespace gneva {

TrajectoryNet::TrajectoryNet(ParamTape& tape, const EncoderConfig& cfg)
    : cfg_(cfg) {
  cfg_.validate();
  first_ = Mlp(tape, "traj.first", cfg.hidden + 2, cfg.hidden, cfg.hidden);
  second_ = Mlp(tape, "traj.second", cfg.hidden, cfg.hidden, 2 * cfg.future_steps);
}

std::vector<Vec2> TrajectoryNet::forward(const ParamTape& tape,
                                         const Tensor& context_feature,
                                         const Vec2& goal, Cache* cache) const {
  if (context_feature.rows() != 1 || context_feature.cols() != cfg_.hidden) {
    throw ShapeMismatch("TrajectoryNet: context feature must be 1 x hidden");
  }
  Tensor x(1, cfg_.hidden + 2);
  x.leftCols(cfg_.hidden) = context_feature;
  x(0, cfg_.hidden) = goal.x() / cfg_.coord_scale;
  x(0, cfg_.hidden + 1) = goal.y() / cfg_.coord_scale;

  Mlp::Cache first_cache, second_cache;
  const Tensor h =
      relu(first_.forward(tape, x, cache ? &first_cache : nullptr));
  const Tensor offsets =
      second_.forward(tape, h, cache ? &second_cache : nullptr);

  const int steps = cfg_.future_steps;
  std::vector<Vec2> waypoints(steps);
  for (int t = 0; t < steps; ++t) {
    const double frac = static_cast<double>(t + 1) / steps;
    waypoints[t] = frac * goal + Vec2(offsets(0, 2 * t), offsets(0, 2 * t + 1));
  }
  waypoints.back() = goal;
  if (cache) {
    cache->input = std::move(x);
    cache->first = std::move(first_cache);
    cache->second = std::move(second_cache);
    cache->hidden = h;
  }
  return waypoints;
}

void TrajectoryNet::backward(const ParamTape& tape, const Cache& cache,
                             const std::vector<Vec2>& d_waypoints,
                             GradBuffer& grads) const {
  const int steps = cfg_.future_steps;
  if (static_cast<int>(d_waypoints.size()) != steps) {
    throw ShapeMismatch("TrajectoryNet: waypoint gradient length != T");
  }
  Tensor d_offsets = Tensor::Zero(1, 2 * steps);
  for (int t = 0; t + 1 < steps; ++t) {
    d_offsets(0, 2 * t) = d_waypoints[t].x();
    d_offsets(0, 2 * t + 1) = d_waypoints[t].y();
  }
  const Tensor dh = second_.backward(tape, cache.second, d_offsets, grads);
  first_.backward(tape, cache.first, relu_backward(cache.hidden, dh), grads);
}

std::vector<PredictedTrajectory> predict_topk(const Scenario& scenario,
                                              const SpatialModel& spatial,
                                              const ParamTape& spatial_tape,
                                              const TrajectoryNet& traj,
                                              const ParamTape& traj_tape,
                                              const PredictConfig& cfg) {
  cfg.nms.validate();
  cfg.candidates.validate();
  if (scenario.T != traj.config().future_steps) {
    throw HorizonMismatch("scenario '" + scenario.scenario_id + "' has T=" +
                          std::to_string(scenario.T) + " but the model predicts " +
                          std::to_string(traj.config().future_steps) + " steps");
  }
  const VectorizedScene scene = vectorize(scenario, spatial.config());
  const SpatialOutput out = spatial.forward(spatial_tape, scene, nullptr);

  std::vector<ScoredCandidate> pool;
  if (cfg.candidates.mode == CandidateMode::kGrid) {
    std::vector<Vec2> centres;
    for (const auto& c : out.mixture.components) centres.push_back(c.eta);
    const Region region = scene_region(scenario, cfg.candidates.margin, centres);
    pool = generate_candidates(out.mixture, out.weights, region,
                               cfg.candidates.spacing, cfg.candidates.max_cells);
  } else {
    pool = sample_candidates(out.mixture, out.weights, cfg.candidates.samples,
                             cfg.candidates.seed);
  }
  std::vector<ScoredCandidate> goals = nms_select(pool, cfg.nms);
  if (goals.size() > static_cast<std::size_t>(cfg.nms.k)) goals.resize(cfg.nms.k);

  std::vector<PredictedTrajectory> result;
  for (const auto& g : goals) {
    PredictedTrajectory p;
    p.goal = g.location;
    p.goal_log_prob = g.log_prob;
    p.waypoints = traj.forward(traj_tape, out.context_feature, g.location, nullptr);
    result.push_back(std::move(p));
  }
  return result;
}

std::vector<PredictedTrajectory> to_world_frame(
    std::vector<PredictedTrajectory> predictions, const FrameTransform& frame) {
  for (auto& p : predictions) {
    p.goal = frame.to_world(p.goal);
    for (auto& w : p.waypoints) w = frame.to_world(w);
  }
  return predictions;
}

std::string predictions_to_json_text(const std::string& scenario_id,
                                     const std::vector<PredictedTrajectory>& preds) {
  nlohmann::json doc;
  doc["scenario_id"] = scenario_id;
  doc["predictions"] = nlohmann::json::array();
  for (const auto& p : preds) {
    nlohmann::json wps = nlohmann::json::array();
    for (const auto& w : p.waypoints) wps.push_back({w.x(), w.y()});
    doc["predictions"].push_back({{"goal_log_prob", p.goal_log_prob},
                                  {"waypoints", std::move(wps)}});
  }
  return doc.dump(1);
}

ScenarioPredictions predictions_from_json_text(std::string_view text) {
  ScenarioPredictions out;
  try {
    const nlohmann::json doc = nlohmann::json::parse(text);
    out.scenario_id = doc.at("scenario_id").get<std::string>();
    for (const auto& p : doc.at("predictions")) {
      PredictedTrajectory t;
      t.goal_log_prob = p.at("goal_log_prob").get<double>();
      for (const auto& w : p.at("waypoints")) {
        if (w.size() != 2) throw ParseError("waypoint must have two coordinates");
        t.waypoints.emplace_back(w[0].get<double>(), w[1].get<double>());
      }
      if (t.waypoints.empty()) throw ParseError("prediction without waypoints");
      t.goal = t.waypoints.back();
      out.predictions.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("prediction document: ") + e.what());
  }
  return out;
}

}  // namespace gneva
