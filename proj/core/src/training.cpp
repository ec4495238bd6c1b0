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

#include "gneva/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "gneva/errors.hpp"
#include "gneva/parallel.hpp"
#include "gneva/special_math.hpp"

namespace gneva {

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1 || max_steps < 0 || warmup_steps < 1) {
    throw ValidationError("TrainConfig: batch_size, epochs and warmup_steps "
                          "must be positive");
  }
  if (!(peak_lr > 0.0) || !(final_lr > 0.0) || !(final_lr < peak_lr)) {
    throw ValidationError("TrainConfig: require 0 < final_lr < peak_lr");
  }
  if (!(weight_decay >= 0.0) || !(ce_weight >= 0.0)) {
    throw ValidationError("TrainConfig: weight_decay and ce_weight must be >= 0");
  }
}

long TrainConfig::total_steps(std::size_t dataset_size) const {
  if (max_steps > 0) return max_steps;
  return static_cast<long>(epochs) *
         static_cast<long>(dataset_size / static_cast<std::size_t>(batch_size));
}

double lr_schedule(long step, long total_steps, const TrainConfig& cfg) {
  if (step <= cfg.warmup_steps) {
    return cfg.peak_lr * static_cast<double>(step) /
           static_cast<double>(cfg.warmup_steps);
  }
  const double span = static_cast<double>(std::max(1L, total_steps - cfg.warmup_steps));
  const double progress =
      std::min(1.0, static_cast<double>(step - cfg.warmup_steps) / span);
  return cfg.final_lr + 0.5 * (cfg.peak_lr - cfg.final_lr) *
                            (1.0 + std::cos(std::numbers::pi * progress));
}

void adamw_step(ParamTape& tape, const GradBuffer& grads, OptimizerState& opt,
                double lr, const TrainConfig& cfg) {
  auto w = tape.values();
  if (grads.size() != w.size() || opt.first_moment.size() != w.size() ||
      opt.second_moment.size() != w.size()) {
    throw ShapeMismatch("adamw_step: gradient or moment size != parameter count");
  }
  ++opt.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.step));
  const double decay = lr * cfg.weight_decay;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double& m = opt.first_moment[i];
    double& v = opt.second_moment[i];
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grads[i];
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grads[i] * grads[i];
    w[i] -= decay * w[i];
    w[i] -= lr * (m / c1) / (std::sqrt(v / c2) + kAdamEpsilon);
  }
}

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_derivative(double r, double delta) {
  return std::clamp(r, -delta, delta);
}

namespace {

NormalWishartGradient negated(const NormalWishartGradient& g) {
  return {-g.d_eta, -g.d_beta, -g.d_V, -g.d_nu};
}

}  // namespace

SpatialLoss spatial_loss(const SpatialModel& model, const ParamTape& tape,
                         const SpatialExample& example, double ce_weight,
                         GradBuffer* grads, std::span<const double> ce_target) {
  SpatialModel::Cache cache;
  const SpatialOutput out = model.forward(tape, example.scene, grads ? &cache : nullptr);
  const std::vector<double> prior_pi = uniform_weights(out.mixture.size());

  ElboGradient eg;
  if (grads) {
    eg = elbo_gradient(example.goal, out.mixture, out.prior, prior_pi);
  } else {
    eg.terms = elbo_terms(example.goal, out.mixture, out.prior, prior_pi);
  }
  std::span<const double> r = eg.terms.responsibilities.q_z;
  if (!ce_target.empty()) {
    if (ce_target.size() != r.size()) {
      throw ShapeMismatch("spatial_loss: ce_target size != component count");
    }
    r = ce_target;
  }
  const std::span<const double> logits(out.logits.data(), out.logits.size());
  const double lse = log_sum_exp(logits);
  double ce = 0.0;
  for (std::size_t c = 0; c < r.size(); ++c) ce -= r[c] * (logits[c] - lse);

  SpatialLoss result;
  result.elbo = eg.terms.value();
  result.ce = ce;
  result.loss = -result.elbo + ce_weight * ce;

  if (grads) {
    SpatialOutputGrad g;
    for (const auto& cg : eg.components) g.components.push_back(negated(cg));
    g.prior = negated(eg.prior);
    g.d_logits.resize(1, static_cast<Eigen::Index>(r.size()));
    for (std::size_t c = 0; c < r.size(); ++c) {
      g.d_logits(0, c) = ce_weight * (out.weights[c] - r[c]);
    }
    model.backward(tape, cache, g, *grads);
  }
  return result;
}

std::vector<double> spatial_responsibilities(const SpatialModel& model,
                                             const ParamTape& tape,
                                             const SpatialExample& example) {
  const SpatialOutput out = model.forward(tape, example.scene, nullptr);
  return z_posterior(example.goal, out.mixture).q_z;
}

double trajectory_loss(const TrajectoryNet& net, const ParamTape& tape,
                       const TrajectoryExample& example, GradBuffer* grads) {
  TrajectoryNet::Cache cache;
  const std::vector<Vec2> pred = net.forward(tape, example.context_feature,
                                             example.goal, grads ? &cache : nullptr);
  if (pred.size() != example.future.size()) {
    throw HorizonMismatch("trajectory example '" + example.scenario_id +
                          "' horizon differs from the network's");
  }
  const double scale = 1.0 / (2.0 * static_cast<double>(pred.size()));
  double loss = 0.0;
  std::vector<Vec2> d(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Vec2 res = pred[t] - example.future[t];
    loss += huber(res.x()) + huber(res.y());
    d[t] = scale * Vec2(huber_derivative(res.x()), huber_derivative(res.y()));
  }
  if (grads) net.backward(tape, cache, d, *grads);
  return loss * scale;
}

namespace {

template <typename Example, typename LossOf>
TrainHistory run_training(const std::vector<Example>& data, ParamTape& tape,
                          const TrainConfig& cfg, bool spatial, LossOf loss_of,
                          const StepCallback& on_step) {
  cfg.validate();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  if (data.size() < batch) {
    throw ValidationError("training set of " + std::to_string(data.size()) +
                          " scenes is smaller than batch_size " +
                          std::to_string(batch));
  }
  const long total = cfg.total_steps(data.size());
  if (total <= cfg.warmup_steps) {
    throw ValidationError("total steps (" + std::to_string(total) +
                          ") must exceed warmup_steps (" +
                          std::to_string(cfg.warmup_steps) + ")");
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  const int workers = static_cast<int>(
      std::min<std::size_t>(batch, static_cast<std::size_t>(worker_count())));
  std::vector<GradBuffer> buffers(workers, tape.make_grad_buffer());
  GradBuffer sum = tape.make_grad_buffer();
  std::vector<SpatialLoss> results(batch);
  OptimizerState opt(tape.size());

  TrainHistory history;
  history.spatial = spatial;
  for (long step = 1; step <= total; ++step) {
    if (cursor + batch > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    for (auto& b : buffers) std::fill(b.begin(), b.end(), 0.0);
    parallel_chunks(batch, workers, [&](std::size_t begin, std::size_t end, int w) {
      for (std::size_t i = begin; i < end; ++i) {
        results[i] = loss_of(data[order[cursor + i]], &buffers[w]);
      }
    });

    StepRecord rec;
    rec.step = step;
    for (std::size_t i = 0; i < batch; ++i) {
      if (!std::isfinite(results[i].loss)) {
        const std::string& id = data[order[cursor + i]].scenario_id;
        throw NonFiniteLoss(id, "non-finite loss at step " + std::to_string(step) +
                                    " on scenario '" + id + "'");
      }
      rec.loss += results[i].loss;
      rec.elbo += results[i].elbo;
      rec.ce += results[i].ce;
    }
    const double inv = 1.0 / static_cast<double>(batch);
    rec.loss *= inv;
    rec.elbo *= inv;
    rec.ce *= inv;
    cursor += batch;

    // Fixed worker-order reduction keeps runs reproducible.
    std::fill(sum.begin(), sum.end(), 0.0);
    for (const auto& b : buffers) {
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += b[j];
    }
    for (double& g : sum) g *= inv;

    rec.lr = lr_schedule(step, total, cfg);
    adamw_step(tape, sum, opt, rec.lr, cfg);
    history.steps.push_back(rec);
    if (on_step) on_step(rec);
  }
  return history;
}

}  // namespace

TrainHistory train_spatial(const std::vector<SpatialExample>& data,
                           const SpatialModel& model, ParamTape& tape,
                           const TrainConfig& cfg, const StepCallback& on_step) {
  return run_training(
      data, tape, cfg, true,
      [&](const SpatialExample& ex, GradBuffer* g) {
        return spatial_loss(model, tape, ex, cfg.ce_weight, g);
      },
      on_step);
}

TrainHistory train_trajectory(const std::vector<TrajectoryExample>& data,
                              const TrajectoryNet& net, ParamTape& tape,
                              const TrainConfig& cfg, const StepCallback& on_step) {
  return run_training(
      data, tape, cfg, false,
      [&](const TrajectoryExample& ex, GradBuffer* g) {
        SpatialLoss l;
        l.loss = trajectory_loss(net, tape, ex, g);
        return l;
      },
      on_step);
}

void write_history_csv(const TrainHistory& history,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "step,lr,loss,elbo,ce\n";
  for (const auto& r : history.steps) {
    out << r.step << ',' << r.lr << ',' << r.loss << ',';
    if (history.spatial) out << r.elbo << ',' << r.ce;
    else out << ',';
    out << '\n';
  }
}

std::vector<Vec2> kmeans_centres(std::span<const Vec2> points, int k,
                                 std::uint64_t seed, int iterations) {
  if (points.empty()) throw EmptyInput("kmeans_centres: no points");
  if (k < 1) throw ValidationError("kmeans_centres: k must be at least 1");
  Rng rng(seed);
  std::vector<Vec2> centres;
  centres.push_back(points[std::uniform_int_distribution<std::size_t>(
      0, points.size() - 1)(rng)]);
  std::vector<double> d2(points.size());
  while (static_cast<int>(centres.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centres) best = std::min(best, (points[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) break;  // fewer distinct points than k
    std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
    centres.push_back(points[pick(rng)]);
  }
  std::vector<std::size_t> assign(points.size(), 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < centres.size(); ++c) {
        if ((points[i] - centres[c]).squaredNorm() <
            (points[i] - centres[best]).squaredNorm()) {
          best = c;
        }
      }
      changed |= best != assign[i];
      assign[i] = best;
    }
    if (!changed) break;
    std::vector<Vec2> sum(centres.size(), Vec2::Zero());
    std::vector<std::size_t> count(centres.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sum[assign[i]] += points[i];
      ++count[assign[i]];
    }
    for (std::size_t c = 0; c < centres.size(); ++c) {
      if (count[c] > 0) centres[c] = sum[c] / static_cast<double>(count[c]);
    }
  }
  while (static_cast<int>(centres.size()) < k) centres.push_back(centres.back());
  return centres;
}

void initialize_from_goals(const SpatialModel& model, ParamTape& tape,
                           const std::vector<SpatialExample>& data,
                           std::uint64_t seed) {
  if (data.empty()) throw EmptyInput("initialize_from_goals: no examples");
  std::vector<Vec2> goals;
  goals.reserve(data.size());
  Vec2 mean = Vec2::Zero();
  for (const auto& ex : data) {
    goals.push_back(ex.goal);
    mean += ex.goal;
  }
  mean /= static_cast<double>(goals.size());
  // Ridge of 1 m^2 keeps the covariance invertible for degenerate data.
  Mat2 cov = Mat2::Identity();
  for (const auto& g : goals) cov += (g - mean) * (g - mean).transpose() / static_cast<double>(goals.size());
  model.set_mean_anchors(tape, kmeans_centres(goals, model.config().components, seed));

  // The precision prior keeps its initial value; beta0 is chosen so that the
  // mean prior (beta0 * E[Lambda0])^-1 spans the goal spread. A unit beta0
  // around the origin charges a sharp component tens of nats for sitting on
  // a goal 25 m ahead, which drives every component broad or onto the prior.
  NormalWishartParams prior = model.prior().value(tape);
  prior.eta = mean;
  const Mat2 expected_precision = prior.nu * prior.V.matrix();
  prior.beta = std::max(2.0 / (expected_precision * cov).trace(), 1e-2);
  model.set_prior(tape, prior);
}

SpatialExample make_spatial_example(const Scenario& world,
                                    const EncoderConfig& cfg) {
  world.validate(true);
  const Scenario local = to_target_frame(world);
  SpatialExample ex;
  ex.scenario_id = world.scenario_id;
  ex.scene = vectorize(local, cfg);
  ex.goal = goal_of(local);
  return ex;
}

std::vector<TrajectoryExample> make_trajectory_examples(
    const std::vector<Scenario>& world, const SpatialModel& model,
    const ParamTape& tape) {
  std::vector<TrajectoryExample> out(world.size());
  parallel_for(world.size(), worker_count(), [&](std::size_t i) {
    world[i].validate(true);
    const Scenario local = to_target_frame(world[i]);
    if (local.T != model.config().future_steps) {
      throw HorizonMismatch("scenario '" + local.scenario_id + "' has T=" +
                            std::to_string(local.T) + ", model expects " +
                            std::to_string(model.config().future_steps));
    }
    TrajectoryExample& ex = out[i];
    ex.scenario_id = local.scenario_id;
    ex.context_feature =
        model.forward(tape, vectorize(local, model.config()), nullptr).context_feature;
    ex.goal = goal_of(local);
    ex.future = ground_truth_future(local);
  });
  return out;
}

}  // namespace gneva
