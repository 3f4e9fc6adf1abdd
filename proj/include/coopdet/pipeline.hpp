#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coopdet/eval.hpp"
#include "coopdet/pose_align.hpp"
#include "coopdet/sim.hpp"
#include "coopdet/spatial_align.hpp"

namespace coopdet {

struct PipelineConfig {
  std::string experiment_id = "default";
  std::size_t feature_width = 256;
  int top_k_queries = 1024;
  double fusion_grid_res = 0.8;
  bool use_fsa = true;
  double fsa_spacing = 0.5;
  bool compensate_latency = true;
  bool use_pose_align = true;
  std::vector<double> iou_thresholds = {0.5, 0.7};
  ScoreSorting sorting = ScoreSorting::kGlobal;
  AlignConfig align;
  double sweep_value = 0.0;  // reported in metrics rows
};

struct FrameStats {
  double t = 0.0;
  std::vector<std::tuple<uint32_t, std::size_t, std::size_t, std::size_t>>
      cpm_records;  // agent, queries, boxes, bytes
};

struct ConnectivityStats {
  ConnectivityReport raw_3d;
  ConnectivityReport after_cec_3d;
  double center_coverage_before = 0.0;
  double center_coverage_after = 0.0;
  std::size_t bev_cells_before = 0;
  std::size_t bev_cells_after = 0;
};

struct PipelineResult {
  std::vector<MetricRow> metrics;
  std::vector<FrameStats> frames;
  ConnectivityStats connectivity;
  double median_translation_err = 0.0;
  double median_rotation_err_deg = 0.0;
  double correspondence_accuracy = 1.0;  // fraction of frames aligned with confidence
};

/// Full deterministic pipeline over one scenario:
/// scan -> augment -> sparse diagnostics -> RoI queries -> temporal prediction
/// -> CPM -> latency -> pose alignment -> spatial fusion -> detection metrics.
PipelineResult run_pipeline(const Scenario& scenario, const PipelineConfig& cfg = {});

struct RunOptions {
  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::string> epsilon;     // "v" or "a:b:step"
  std::optional<std::string> latency_ms;  // "v" or "a:b:step"
  std::optional<double> cpm_threshold;
  std::optional<uint64_t> seed;
  ScoreSorting sorting = ScoreSorting::kGlobal;
  bool no_fsa = false;
  bool no_compensation = false;
};

/// Parse "v" or "a:b:step" into an inclusive value list.
std::vector<double> parse_sweep(const std::string& spec);

/// Runs every sweep point and writes metrics.csv, cpm_sizes.csv,
/// connectivity.json and run_manifest.json into out_dir. Outputs are written
/// only after every point completes. Returns a process exit code
/// (0 ok, 2 config error, 3 runtime error).
int run_experiment(const RunOptions& options);

}  // namespace coopdet
