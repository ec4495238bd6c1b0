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


#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "gneva/errors.hpp"
#include "gneva/metrics.hpp"
#include "gneva/sampling.hpp"
#include "gneva/synth.hpp"
#include "gneva/training.hpp"
#include "gneva/trajectory.hpp"
#include "gneva/verify/suites.hpp"
#include "run_config.hpp"

namespace gneva::cli {
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  apply_overrides(cfg, overrides);
  cfg.validate();
  return cfg;
}

std::vector<Scenario> load_data(const std::string& path) {
  std::vector<Scenario> data = load_scenario_dir(path);
  if (data.empty()) throw EmptyInput("no scenarios found in " + path);
  return data;
}

StepCallback progress(std::ostream& out, const std::string& phase, long total) {
  const long every = std::max(1L, total / 20);
  return [&out, phase, every, total](const StepRecord& r) {
    if (r.step != 1 && r.step % every != 0 && r.step != total) return;
    out << phase << " step " << r.step << "/" << total << " lr " << r.lr
        << " loss " << r.loss << "\n";
  };
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string kind;
  int n = 100;
  std::uint64_t seed = 0;
  int history = 10;
  int future = 30;
  std::string out;
};

void run_synth(const SynthArgs& a, std::ostream& out) {
  SynthConfig cfg;
  cfg.n = a.n;
  cfg.seed = a.seed;
  cfg.H = a.history;
  cfg.T = a.future;
  const std::vector<Scenario> scenes = synth_generate(cfg, parse_scene_kind(a.kind));
  fs::create_directories(a.out);
  for (const Scenario& s : scenes) save_scenario(s, fs::path(a.out) / (s.scenario_id + ".json"));
  out << "wrote " << scenes.size() << " " << a.kind << " scenes to " << a.out << "\n";
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string data;
  std::string spatial_model;  // trajectory phase only
  std::string out;
  std::string history;
};

void run_train_spatial(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve_config(a.config, a.overrides);
  const std::vector<Scenario> scenes = load_data(a.data);
  std::vector<SpatialExample> examples;
  examples.reserve(scenes.size());
  for (const Scenario& s : scenes) examples.push_back(make_spatial_example(s, cfg.encoder));

  SpatialBundle bundle(cfg.encoder, cfg.train.seed);
  if (cfg.init_from_goals) initialize_from_goals(bundle.model, bundle.tape, examples, cfg.train.seed);
  const long total = cfg.train.total_steps(examples.size());
  const TrainHistory history = train_spatial(examples, bundle.model, bundle.tape, cfg.train,
                                             progress(out, "spatial", total));
  save_spatial(bundle, a.out);
  if (!a.history.empty()) write_history_csv(history, a.history);
  out << "saved spatial model to " << a.out << "\n";
}

void run_train_traj(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve_config(a.config, a.overrides);
  const SpatialBundle spatial = load_spatial(a.spatial_model);
  const std::vector<Scenario> scenes = load_data(a.data);
  const std::vector<TrajectoryExample> examples =
      make_trajectory_examples(scenes, spatial.model, spatial.tape);

  // The trajectory net must agree with the spatial model's feature width.
  TrajectoryBundle bundle(spatial.model.config(), cfg.train.seed);
  const long total = cfg.train.total_steps(examples.size());
  const TrainHistory history = train_trajectory(examples, bundle.net, bundle.tape, cfg.train,
                                                progress(out, "trajectory", total));
  save_trajectory(bundle, a.out);
  if (!a.history.empty()) write_history_csv(history, a.history);
  out << "saved trajectory model to " << a.out << "\n";
}

struct PredictArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string spatial_model;
  std::string traj_model;
  std::string scenario;
  int k = 6;
  double radius = 2.0;
  double iou = 0.0;
  std::string out;
};

void run_predict(const PredictArgs& a, std::ostream& out) {
  RunConfig cfg = resolve_config(a.config, a.overrides);
  PredictConfig pc;
  pc.nms = cfg.nms;
  pc.nms.k = a.k;
  pc.nms.radius = a.radius;
  pc.nms.iou_threshold = a.iou;
  pc.nms.validate();
  pc.candidates = cfg.candidates;

  const SpatialBundle spatial = load_spatial(a.spatial_model);
  const TrajectoryBundle traj = load_trajectory(a.traj_model);
  const std::vector<Scenario> scenes = load_data(a.scenario);
  const bool single = fs::is_regular_file(a.scenario);
  for (const Scenario& world : scenes) {
    const std::vector<PredictedTrajectory> local = predict_topk(
        to_target_frame(world), spatial.model, spatial.tape, traj.net, traj.tape, pc);
    const std::string text =
        predictions_to_json_text(world.scenario_id, to_world_frame(local, target_frame(world)));
    write_text(single ? fs::path(a.out) : fs::path(a.out) / (world.scenario_id + ".json"), text);
  }
  out << "wrote predictions for " << scenes.size() << " scenario(s) to " << a.out << "\n";
}

struct EvalArgs {
  std::string pred;
  std::string data;
  int k = 6;
  std::string out;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  std::vector<fs::path> files;
  if (fs::is_directory(a.pred)) {
    for (const auto& e : fs::directory_iterator(a.pred)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
  } else {
    files.push_back(a.pred);
  }
  std::map<std::string, std::vector<Trajectory>> by_id;
  for (const fs::path& f : files) {
    ScenarioPredictions p = predictions_from_json_text(read_text(f));
    std::vector<Trajectory> trajs;
    for (auto& t : p.predictions) trajs.push_back(std::move(t.waypoints));
    by_id[p.scenario_id] = std::move(trajs);
  }

  std::vector<std::vector<Trajectory>> preds;
  std::vector<Trajectory> truths;
  for (const Scenario& s : load_data(a.data)) {
    const auto it = by_id.find(s.scenario_id);
    if (it == by_id.end()) {
      throw ValidationError("no predictions for scenario '" + s.scenario_id + "'");
    }
    preds.push_back(it->second);
    truths.push_back(ground_truth_future(s));
  }
  const MetricReport report = displacement_metrics(preds, truths, a.k);
  out << report_to_table(report);
  if (!a.out.empty()) write_text(a.out, report_to_json_text(report));
}

struct DensityArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string spatial_model;
  std::string scenario;
  double spacing = 0.5;
  std::string out;
};

void run_density(const DensityArgs& a, std::ostream& out) {
  const RunConfig cfg = resolve_config(a.config, a.overrides);
  const SpatialBundle spatial = load_spatial(a.spatial_model);
  emit_density_grid(spatial, load_scenario(a.scenario), a.spacing, cfg.candidates.margin, a.out);
  out << "wrote density grid to " << a.out << "\n";
}

struct MaskArgs {
  std::string scenario;
  double radius = 0.0;
  std::string out;
};

void run_mask_map(const MaskArgs& a, std::ostream& out) {
  if (!(a.radius >= 0.0)) throw ValidationError("mask radius must be non-negative");
  const Scenario world = load_scenario(a.scenario);
  const FrameTransform frame = target_frame(world);
  // Masking is defined around the target, so it runs in the target frame.
  const Scenario masked =
      transform_scenario(mask_map_by_radius(transform_scenario(world, frame), a.radius), frame,
                         /*to_world=*/true);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_scenario(masked, a.out);
  out << "kept " << masked.map.size() << " of " << world.map.size()
      << " map polylines within " << a.radius << " m\n";
}

int run_verify(bool fast, std::ostream& out) {
  bool all = true;
  for (const verify::SuiteResult& r : verify::run_all_suites(fast)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  return all ? kExitOk : kExitNumerical;
}

}  // namespace

void emit_density_grid(const SpatialBundle& spatial, const Scenario& world, double spacing,
                       double margin, const fs::path& out_path) {
  const Scenario local = to_target_frame(world);
  const SpatialOutput net = spatial.model.forward(
      spatial.tape, vectorize(local, spatial.model.config()), nullptr);
  std::vector<Vec2> centres;
  for (const auto& c : net.mixture.components) centres.push_back(c.eta);
  const Region region = scene_region(local, margin, centres);
  const std::vector<ScoredCandidate> cells =
      generate_candidates(net.mixture, net.weights, region, spacing);

  const FrameTransform frame = target_frame(world);
  std::string text = "x,y,log_density\n";
  char line[96];
  for (const ScoredCandidate& c : cells) {
    const Vec2 w = frame.to_world(c.location);
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.10g\n", w.x(), w.y(), c.log_prob);
    text += line;
  }
  write_text(out_path, text);
}

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Goal-based motion prediction with a variational Gaussian mixture"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand help for all subcommands");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate synthetic scenarios");
  c_synth->add_option("--kind", synth.kind, "straight | turn | merge")->required();
  c_synth->add_option("--n", synth.n, "Number of scenes")->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--history-steps", synth.history)->capture_default_str();
  c_synth->add_option("--future-steps", synth.future)->capture_default_str();
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs ts;
  auto* c_ts = app.add_subcommand("train-spatial", "Train the goal distribution model");
  c_ts->add_option("--config", ts.config, "JSON config with dotted keys");
  c_ts->add_option("--set", ts.overrides, "Override a config key (key=value)");
  c_ts->add_option("--data", ts.data, "Scenario directory")->required();
  c_ts->add_option("--out", ts.out, "Model file")->required();
  c_ts->add_option("--history", ts.history, "Per-step loss CSV");

  TrainArgs tt;
  auto* c_tt = app.add_subcommand("train-traj", "Train the trajectory completion net");
  c_tt->add_option("--config", tt.config, "JSON config with dotted keys");
  c_tt->add_option("--set", tt.overrides, "Override a config key (key=value)");
  c_tt->add_option("--data", tt.data, "Scenario directory")->required();
  c_tt->add_option("--spatial-model", tt.spatial_model)->required();
  c_tt->add_option("--out", tt.out, "Model file")->required();
  c_tt->add_option("--history", tt.history, "Per-step loss CSV");

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Predict top-k goals and trajectories");
  c_pr->add_option("--config", pr.config, "JSON config with dotted keys");
  c_pr->add_option("--set", pr.overrides, "Override a config key (key=value)");
  c_pr->add_option("--spatial-model", pr.spatial_model)->required();
  c_pr->add_option("--traj-model", pr.traj_model)->required();
  c_pr->add_option("--scenario", pr.scenario, "Scenario file or directory")->required();
  c_pr->add_option("--k", pr.k)->capture_default_str();
  c_pr->add_option("--radius", pr.radius, "NMS circle radius (m)")->capture_default_str();
  c_pr->add_option("--iou", pr.iou, "NMS IoU threshold")->capture_default_str();
  c_pr->add_option("--out", pr.out, "Output file (or directory for many scenarios)")->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Score predictions against ground truth");
  c_ev->add_option("--pred", ev.pred, "Prediction file or directory")->required();
  c_ev->add_option("--data", ev.data, "Scenario directory")->required();
  c_ev->add_option("--k", ev.k)->capture_default_str();
  c_ev->add_option("--out", ev.out, "Also write the report as JSON");

  DensityArgs de;
  auto* c_de = app.add_subcommand("density", "Export the goal density over the candidate grid");
  c_de->add_option("--config", de.config, "JSON config with dotted keys");
  c_de->add_option("--set", de.overrides, "Override a config key (key=value)");
  c_de->add_option("--spatial-model", de.spatial_model)->required();
  c_de->add_option("--scenario", de.scenario)->required();
  c_de->add_option("--spacing", de.spacing)->capture_default_str();
  c_de->add_option("--out", de.out, "CSV file")->required();

  MaskArgs ma;
  auto* c_ma = app.add_subcommand("mask-map", "Drop map polylines beyond a radius of the target");
  c_ma->add_option("--scenario", ma.scenario)->required();
  c_ma->add_option("--radius", ma.radius, "Radius in meters")->required();
  c_ma->add_option("--out", ma.out)->required();

  bool fast = false;
  auto* c_ve = app.add_subcommand("verify", "Run the Monte-Carlo and brute-force oracle suites");
  c_ve->add_flag("--fast", fast, "Reduced sample counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*c_synth) run_synth(synth, out);
    if (*c_ts) run_train_spatial(ts, out);
    if (*c_tt) run_train_traj(tt, out);
    if (*c_pr) run_predict(pr, out);
    if (*c_ev) run_eval(ev, out);
    if (*c_de) run_density(de, out);
    if (*c_ma) run_mask_map(ma, out);
    if (*c_ve) return run_verify(fast, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace gneva::cli
