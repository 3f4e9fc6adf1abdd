#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "coopdet/pipeline.hpp"

using namespace coopdet;
namespace fs = std::filesystem;

namespace {

const char* kTwoAgentCfg = R"(seed 7
duration 0.3
frame_period 0.1
epsilon 0.0
latency_ms 0 0
cpm_threshold 0.1
range -120 120 -40 40
lidar 1.9 16 2 0.1
agent 0 0 0 0 0 0 0
agent 1 40 0 180 0 0 0
vehicle 12 3 0.8 4.2 1.9 1.6 0 5 0 0
vehicle 20 -4 0.8 4.2 1.9 1.6 90 0 0 0
vehicle 28 3 0.8 4.2 1.9 1.6 0 0 0 0
)";

PipelineConfig light_config() {
  PipelineConfig cfg;
  cfg.feature_width = 16;
  cfg.top_k_queries = 128;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parse_sweep accepts single values and ranges") {
  CHECK(parse_sweep("0.5") == std::vector<double>{0.5});
  const auto r = parse_sweep("0:1:0.25");
  REQUIRE(r.size() == 5);
  CHECK(r.front() == 0.0);
  CHECK(r.back() == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_sweep("0:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sweep("0:1:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sweep("abc"), std::exception);
}

TEST_CASE("pipeline runs a two-agent scenario end to end") {
  const Scenario sc = parse_scenario(kTwoAgentCfg);
  const PipelineResult res = run_pipeline(sc, light_config());

  REQUIRE(res.frames.size() == 3);
  REQUIRE(res.metrics.size() == 2);  // default IoU thresholds 0.5 and 0.7
  for (const MetricRow& row : res.metrics) {
    CHECK(row.ap >= 0.0);
    CHECK(row.ap <= 1.0);
  }
  // zero latency, zero noise: detection at 0.5 IoU should mostly work and the
  // relative pose error stays near zero
  CHECK(res.metrics[0].ap > 0.5);
  CHECK(res.median_translation_err < 0.5);
  CHECK(res.median_rotation_err_deg < 2.0);

  // one CPM per cooperative agent per frame, within the size budget
  for (const FrameStats& f : res.frames) {
    REQUIRE(f.cpm_records.size() == 1);
    const auto& [agent, nq, nb, bytes] = f.cpm_records[0];
    CHECK(agent == 1);
    CHECK(bytes <= 1300000);
    CHECK(bytes >= 84);
  }

  // first-frame diagnostics were collected
  CHECK(res.connectivity.bev_cells_before > 0);
  CHECK(res.connectivity.bev_cells_after > res.connectivity.bev_cells_before);
  CHECK(res.connectivity.center_coverage_after >=
        res.connectivity.center_coverage_before);
}

TEST_CASE("pipeline is deterministic") {
  const Scenario sc = parse_scenario(kTwoAgentCfg);
  const PipelineConfig cfg = light_config();
  const PipelineResult a = run_pipeline(sc, cfg);
  const PipelineResult b = run_pipeline(sc, cfg);

  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(to_csv_row(a.metrics[i]) == to_csv_row(b.metrics[i]));
  }
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    CHECK(a.frames[i].cpm_records == b.frames[i].cpm_records);
  }
  CHECK(a.median_translation_err == b.median_translation_err);
  CHECK(a.correspondence_accuracy == b.correspondence_accuracy);
}

TEST_CASE("pipeline rejects an empty scenario") {
  CHECK_THROWS_AS(run_pipeline(Scenario{}, light_config()),
                  std::invalid_argument);
}

TEST_CASE("run_experiment writes the artifact set deterministically") {
  const fs::path dir = fs::temp_directory_path() / "coopdet_test_run";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path scenario = dir / "scene.cfg";
  {
    std::ofstream out(scenario);
    out << kTwoAgentCfg;
  }

  RunOptions opts;
  opts.scenario_path = scenario.string();
  opts.out_dir = (dir / "out_a").string();
  opts.epsilon = "0:0.5:0.5";  // two sweep points
  REQUIRE(run_experiment(opts) == 0);

  for (const char* name :
       {"metrics.csv", "cpm_sizes.csv", "connectivity.json", "run_manifest.json"}) {
    CHECK(fs::exists(fs::path(opts.out_dir) / name));
  }

  // same options, fresh directory: byte-identical outputs
  RunOptions again = opts;
  again.out_dir = (dir / "out_b").string();
  REQUIRE(run_experiment(again) == 0);
  for (const char* name : {"metrics.csv", "cpm_sizes.csv", "connectivity.json"}) {
    CHECK(slurp(fs::path(opts.out_dir) / name) ==
          slurp(fs::path(again.out_dir) / name));
  }

  // metrics.csv holds header plus 2 thresholds x 2 sweep points
  std::istringstream metrics(slurp(fs::path(opts.out_dir) / "metrics.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) ++lines;
  CHECK(lines == 5);

  fs::remove_all(dir);
}

TEST_CASE("run_experiment reports config errors without writing") {
  RunOptions opts;
  opts.scenario_path = "/nonexistent/scene.cfg";
  CHECK(run_experiment(opts) == 2);

  const fs::path dir = fs::temp_directory_path() / "coopdet_test_cfgerr";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path scenario = dir / "scene.cfg";
  {
    std::ofstream out(scenario);
    out << kTwoAgentCfg;
  }
  RunOptions both;
  both.scenario_path = scenario.string();
  both.out_dir = (dir / "out").string();
  both.epsilon = "0:1:0.5";
  both.latency_ms = "0:200:100";
  CHECK(run_experiment(both) == 2);
  CHECK_FALSE(fs::exists(fs::path(both.out_dir) / "metrics.csv"));

  RunOptions bad_sweep;
  bad_sweep.scenario_path = scenario.string();
  bad_sweep.epsilon = "1:0:-1";
  CHECK(run_experiment(bad_sweep) == 2);
  fs::remove_all(dir);
}
