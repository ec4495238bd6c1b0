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

#ifndef GNEVA_TRAJECTORY_HPP_
#define GNEVA_TRAJECTORY_HPP_

#include <string>
#include <vector>

#include "gneva/encoders.hpp"
#include "gneva/sampling.hpp"

namespace gneva {

// Two MLPs with a ReLU between them map [context_feature; goal / scale] to
// T x 2 offsets (meters) added to the constant-speed line from the current
// position to the goal. The last waypoint is the goal itself.
class TrajectoryNet {
 public:
  struct Cache {
    Tensor input;
    Mlp::Cache first, second;
    Tensor hidden;  // ReLU output between the two MLPs
  };

  TrajectoryNet(ParamTape& tape, const EncoderConfig& cfg);

  const EncoderConfig& config() const { return cfg_; }

  // Waypoints for steps H+1..H+T in the target frame.
  std::vector<Vec2> forward(const ParamTape& tape, const Tensor& context_feature,
                            const Vec2& goal, Cache* cache) const;
  // d_waypoints holds dLoss/dwaypoint for each step; the last entry is
  // ignored because the final waypoint does not depend on the parameters.
  void backward(const ParamTape& tape, const Cache& cache,
                const std::vector<Vec2>& d_waypoints, GradBuffer& grads) const;

 private:
  EncoderConfig cfg_;
  Mlp first_;
  Mlp second_;
};

struct PredictedTrajectory {
  Vec2 goal = Vec2::Zero();
  std::vector<Vec2> waypoints;
  double goal_log_prob = 0.0;
};

struct PredictConfig {
  NmsConfig nms;
  CandidateConfig candidates;
};

// Encoders -> mixture and proxy weights -> candidates -> NMS -> first k
// goals -> completion. `scenario` must be in its target frame; the result
// is sorted by goal_log_prob, highest first.
std::vector<PredictedTrajectory> predict_topk(const Scenario& scenario,
                                              const SpatialModel& spatial,
                                              const ParamTape& spatial_tape,
                                              const TrajectoryNet& traj,
                                              const ParamTape& traj_tape,
                                              const PredictConfig& cfg);

// Maps waypoints and goals from the coordinates of `frame` to the world.
std::vector<PredictedTrajectory> to_world_frame(
    std::vector<PredictedTrajectory> predictions, const FrameTransform& frame);

std::string predictions_to_json_text(const std::string& scenario_id,
                                     const std::vector<PredictedTrajectory>& preds);

struct ScenarioPredictions {
  std::string scenario_id;
  std::vector<PredictedTrajectory> predictions;
};

// Throws ParseError on malformed documents.
ScenarioPredictions predictions_from_json_text(std::string_view text);

}  // namespace gneva

#endif  // GNEVA_TRAJECTORY_HPP_
