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
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "gneva/model_io.hpp"
#include "gneva/sampling.hpp"

namespace gneva::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::initializer_list<std::string> args) {
  std::vector<std::string> owned = {"gneva"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One small trained pipeline shared by every test; the model is tiny so the
// suite stays fast, quality is covered elsewhere.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "gneva_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    const std::string data = (root_ / "data").string();
    ASSERT_EQ(run({"synth", "--kind", "turn", "--n", "12", "--seed", "3", "--out", data}).code, 0);
    const std::vector<std::string> small = {"encoder.hidden=16", "encoder.context_layers=1",
                                            "train.max_steps=10", "train.warmup_steps=2",
                                            "train.batch_size=4"};
    std::ofstream(root_ / "small.json") << R"({"encoder.hidden": 16, "encoder.context_layers": 1,
      "train.max_steps": 10, "train.warmup_steps": 2, "train.batch_size": 4})";
    const std::string config = (root_ / "small.json").string();
    ASSERT_EQ(run({"train-spatial", "--config", config, "--data", data, "--out",
                   spatial(), "--history", (root_ / "spatial.csv").string()})
                  .code,
              0);
    ASSERT_EQ(run({"train-traj", "--config", config, "--data", data, "--spatial-model",
                   spatial(), "--out", traj()})
                  .code,
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string spatial() { return (root_ / "spatial.json").string(); }
  static std::string traj() { return (root_ / "traj.json").string(); }
  static std::string data() { return (root_ / "data").string(); }
  static std::string first_scene() { return (root_ / "data" / "turn-s3-00000.json").string(); }

  static fs::path root_;
};

fs::path CliPipeline::root_;

TEST(CliUsage, ExitCodes) {
  const std::string tmp = (fs::temp_directory_path() / "gneva_cli_usage").string();
  EXPECT_EQ(run({"synth", "--kind", "turn", "--n", "0", "--out", tmp}).code, kExitValidation);
  EXPECT_EQ(run({"synth", "--kind", "turn", "--n", "1", "--bogus", "--out", tmp}).code,
            kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"synth", "--kind", "roundabout", "--n", "1", "--out", tmp}).code,
            kExitValidation);
  const Outcome help = run({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("train-spatial"), std::string::npos);
  fs::remove_all(tmp);
}

TEST(CliUsage, VerifyFastPasses) {
  const Outcome r = run({"verify", "--fast"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST_F(CliPipeline, TrainingWritesHistoryAndModels) {
  const std::string csv = slurp(root_ / "spatial.csv");
  EXPECT_EQ(csv.rfind("step,lr,loss,elbo,ce\n", 0), 0u);
  EXPECT_NO_THROW(load_spatial(spatial()));
  EXPECT_NO_THROW(load_trajectory(traj()));
  EXPECT_EQ(load_spatial(spatial()).model.config().hidden, 16);
}

TEST_F(CliPipeline, ConfigOverridesAndUnknownKeys) {
  const std::string out = (root_ / "unused.json").string();
  EXPECT_EQ(run({"train-spatial", "--data", data(), "--out", out, "--set", "train.no_such=1"})
                .code,
            kExitValidation);
  std::ofstream(root_ / "bad.json") << R"({"encoder.hiddn": 16})";
  EXPECT_EQ(run({"train-spatial", "--config", (root_ / "bad.json").string(), "--data", data(),
                 "--out", out})
                .code,
            kExitValidation);
  EXPECT_EQ(run({"train-spatial", "--data", data(), "--out", out, "--set",
                 "train.peak_lr=-1"})
                .code,
            kExitValidation);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliPipeline, PredictDefaultsAndEval) {
  const fs::path single = root_ / "pred_single.json";
  ASSERT_EQ(run({"predict", "--spatial-model", spatial(), "--traj-model", traj(), "--scenario",
                 first_scene(), "--out", single.string()})
                .code,
            0);
  const auto doc = nlohmann::json::parse(slurp(single));
  const ScenarioPredictions p = predictions_from_json_text(slurp(single));
  EXPECT_EQ(p.scenario_id, "turn-s3-00000");
  ASSERT_FALSE(p.predictions.empty());
  EXPECT_LE(p.predictions.size(), 6u);
  // Default NMS: radius 2 with a zero IoU threshold keeps goals 4 m apart.
  for (std::size_t i = 0; i < p.predictions.size(); ++i) {
    EXPECT_EQ(p.predictions[i].waypoints.size(), 30u);
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_GE((p.predictions[i].goal - p.predictions[j].goal).norm(), 4.0 - 1e-9);
    }
  }

  const fs::path dir = root_ / "preds";
  ASSERT_EQ(run({"predict", "--spatial-model", spatial(), "--traj-model", traj(), "--scenario",
                 data(), "--k", "3", "--out", dir.string()})
                .code,
            0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    EXPECT_LE(predictions_from_json_text(slurp(e.path())).predictions.size(), 3u);
  }
  EXPECT_EQ(files, 12);

  const fs::path report = root_ / "report.json";
  const Outcome ev =
      run({"eval", "--pred", dir.string(), "--data", data(), "--out", report.string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("mADE_6"), std::string::npos);
  const auto rep = nlohmann::json::parse(slurp(report));
  EXPECT_EQ(rep.at("n_scenarios"), 12);
  EXPECT_GE(rep.at("made_k").get<double>(), 0.0);
  EXPECT_LE(rep.at("mfde_k").get<double>(), 1e3);

  EXPECT_EQ(run({"eval", "--pred", single.string(), "--data", data()}).code, kExitValidation);
  EXPECT_EQ(run({"predict", "--spatial-model", spatial(), "--traj-model", traj(), "--scenario",
                 first_scene(), "--iou", "1.5", "--out", single.string()})
                .code,
            kExitValidation);
}

TEST_F(CliPipeline, DensityGridIsNormalizedAndReproducible) {
  const fs::path a = root_ / "density_a.csv";
  const fs::path b = root_ / "density_b.csv";
  ASSERT_EQ(run({"density", "--spatial-model", spatial(), "--scenario", first_scene(),
                 "--spacing", "0.5", "--out", a.string()})
                .code,
            0);
  ASSERT_EQ(run({"density", "--spatial-model", spatial(), "--scenario", first_scene(),
                 "--spacing", "0.5", "--out", b.string()})
                .code,
            0);
  const std::string text = slurp(a);
  EXPECT_EQ(text, slurp(b));

  auto read_grid = [](const std::string& csv, double cell_area) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x,y,log_density");
    std::size_t cells = 0;
    double mass = 0.0;
    while (std::getline(in, line)) {
      ++cells;
      mass += std::exp(std::stod(line.substr(line.rfind(',') + 1))) * cell_area;
    }
    return std::pair{cells, mass};
  };

  const Scenario local = to_target_frame(load_scenario(first_scene()));
  const SpatialBundle bundle = load_spatial(spatial());
  const SpatialOutput net =
      bundle.model.forward(bundle.tape, vectorize(local, bundle.model.config()), nullptr);
  std::vector<Vec2> centres;
  for (const auto& c : net.mixture.components) centres.push_back(c.eta);
  const Region region = scene_region(local, CandidateConfig{}.margin, centres);
  const auto [cells, scene_mass] = read_grid(text, 0.25);
  EXPECT_EQ(cells, grid_points(region.width(), 0.5) * grid_points(region.height(), 0.5));
  EXPECT_LE(scene_mass, 1.0);

  // The barely trained model has heavy tails; widen the grid until it covers
  // the predictive mass before checking normalization.
  const fs::path wide = root_ / "density_wide.csv";
  ASSERT_EQ(run({"density", "--spatial-model", spatial(), "--scenario", first_scene(),
                 "--spacing", "1.0", "--set", "candidates.margin=80", "--out", wide.string()})
                .code,
            0);
  const auto [wide_cells, mass] = read_grid(slurp(wide), 1.0);
  EXPECT_GT(wide_cells, cells / 4);
  EXPECT_GE(mass, 0.9);
  EXPECT_LE(mass, 1.0);
}

TEST_F(CliPipeline, MaskMapKeepsTargetAndDropsFarPolylines) {
  const fs::path out = root_ / "masked" / "scene.json";
  const Outcome r = run({"mask-map", "--scenario", first_scene(), "--radius", "0", "--out",
                         out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Scenario masked = load_scenario(out);
  const Scenario original = load_scenario(first_scene());
  EXPECT_TRUE(masked.map.empty());
  ASSERT_EQ(masked.agents.size(), original.agents.size());
  EXPECT_NEAR(masked.target().states.back().x, original.target().states.back().x, 1e-9);

  const fs::path wide = root_ / "masked" / "wide.json";
  ASSERT_EQ(run({"mask-map", "--scenario", first_scene(), "--radius", "1e6", "--out",
                 wide.string()})
                .code,
            0);
  EXPECT_EQ(load_scenario(wide).map.size(), original.map.size());
  EXPECT_EQ(run({"mask-map", "--scenario", first_scene(), "--radius", "-1", "--out",
                 wide.string()})
                .code,
            kExitValidation);

  // The masked scene still predicts.
  EXPECT_EQ(run({"predict", "--spatial-model", spatial(), "--traj-model", traj(), "--scenario",
                 out.string(), "--out", (root_ / "masked_pred.json").string()})
                .code,
            0);
}

}  // namespace
}  // namespace gneva::cli
