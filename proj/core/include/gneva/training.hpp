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

#ifndef GNEVA_TRAINING_HPP_
#define GNEVA_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gneva/encoders.hpp"
#include "gneva/trajectory.hpp"

namespace gneva {

struct TrainConfig {
  int batch_size = 64;
  int epochs = 36;
  long max_steps = 0;  // > 0 overrides the epoch-derived step count
  double peak_lr = 1e-3;
  long warmup_steps = 1000;
  double final_lr = 3e-7;
  double weight_decay = 1e-3;
  double ce_weight = 1.0;
  std::uint64_t seed = 0;

  // Throws ValidationError unless every size and rate is positive and
  // final_lr < peak_lr.
  void validate() const;
  // max_steps when set, otherwise epochs * floor(dataset_size / batch_size).
  long total_steps(std::size_t dataset_size) const;
};

// Linear warmup to peak_lr, then cosine annealing to final_lr at total_steps.
double lr_schedule(long step, long total_steps, const TrainConfig& cfg);

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step = 0;

  OptimizerState() = default;
  explicit OptimizerState(std::size_t size)
      : first_moment(size, 0.0), second_moment(size, 0.0) {}
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Decoupled weight decay (w -= lr * wd * w) followed by the bias-corrected
// Adam update computed from `grads`.
void adamw_step(ParamTape& tape, const GradBuffer& grads, OptimizerState& opt,
                double lr, const TrainConfig& cfg);

double huber(double residual, double delta = 1.0);
double huber_derivative(double residual, double delta = 1.0);

// One target-frame training scene.
struct SpatialExample {
  std::string scenario_id;
  VectorizedScene scene;
  Vec2 goal = Vec2::Zero();
};

struct TrajectoryExample {
  std::string scenario_id;
  Tensor context_feature;  // from the frozen spatial model
  Vec2 goal = Vec2::Zero();
  std::vector<Vec2> future;  // steps H+1..H+T
};

struct SpatialLoss {
  double loss = 0.0;  // -elbo + ce_weight * ce
  double elbo = 0.0;
  double ce = 0.0;
};

// Loss of one scene; with a non-null buffer also accumulates its gradient.
// The responsibilities enter the cross-entropy as a constant target. A
// non-empty `ce_target` replaces them in the cross-entropy, which makes the
// returned value a function whose exact gradient is the one accumulated
// (used by finite-difference checks).
SpatialLoss spatial_loss(const SpatialModel& model, const ParamTape& tape,
                         const SpatialExample& example, double ce_weight,
                         GradBuffer* grads, std::span<const double> ce_target = {});

// Responsibilities of the example's goal under the current model.
std::vector<double> spatial_responsibilities(const SpatialModel& model,
                                             const ParamTape& tape,
                                             const SpatialExample& example);

// Mean Huber loss (delta 1 m) over all waypoint coordinates.
double trajectory_loss(const TrajectoryNet& net, const ParamTape& tape,
                       const TrajectoryExample& example, GradBuffer* grads);

struct StepRecord {
  long step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double elbo = 0.0;  // spatial phase only
  double ce = 0.0;    // spatial phase only
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  bool spatial = true;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Minimizes the batch-mean spatial loss with AdamW. Batches come from a
// per-epoch shuffle seeded by cfg.seed; incomplete final batches are
// dropped. Throws NonFiniteLoss naming the first offending scenario.
TrainHistory train_spatial(const std::vector<SpatialExample>& data,
                           const SpatialModel& model, ParamTape& tape,
                           const TrainConfig& cfg, const StepCallback& on_step = {});

TrainHistory train_trajectory(const std::vector<TrajectoryExample>& data,
                              const TrajectoryNet& net, ParamTape& tape,
                              const TrainConfig& cfg,
                              const StepCallback& on_step = {});

// CSV with header step,lr,loss,elbo,ce. The trajectory phase leaves the
// last two columns empty.
void write_history_csv(const TrainHistory& history,
                       const std::filesystem::path& path);

// Lloyd's k-means with k-means++ seeding; deterministic for a seed. Returns
// min(k, distinct points) centres, padded by repeating the last centre.
std::vector<Vec2> kmeans_centres(std::span<const Vec2> points, int k,
                                 std::uint64_t seed, int iterations = 100);

// Data-driven start for the spatial model: component means at k-means
// centres of the training goals, and the prior mean centred on the goal
// mean with beta0 scaled to the goal spread. Without it the
// interchangeable components collapse onto one.
void initialize_from_goals(const SpatialModel& model, ParamTape& tape,
                           const std::vector<SpatialExample>& data,
                           std::uint64_t seed);

// Scenario (world frame, with future) to a target-frame training example.
SpatialExample make_spatial_example(const Scenario& world,
                                    const EncoderConfig& cfg);

// Context features from the frozen spatial model, computed in parallel.
std::vector<TrajectoryExample> make_trajectory_examples(
    const std::vector<Scenario>& world, const SpatialModel& model,
    const ParamTape& tape);

}  // namespace gneva

#endif  // GNEVA_TRAINING_HPP_
