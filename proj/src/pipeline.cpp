#include "coopdet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace coopdet {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ICF/CFM diagnostics on the first ego frame
ConnectivityStats grid_diagnostics(const TimedPointCloud& scan,
                                   const std::vector<BBox>& gt_in_ego) {
  ConnectivityStats stats;
  const SparseGrid g3 = voxelize(scan, 0.4, 3);
  stats.raw_3d = connectivity(g3);
  SparseGrid expanded = g3;
  for (int i = 0; i < 2; ++i) expanded = cec_expand(expanded, 3);
  stats.after_cec_3d = connectivity(expanded);

  const SparseGrid bev = voxelize(scan, 0.4, 2);
  stats.bev_cells_before = bev.size();
  stats.center_coverage_before = center_coverage(bev, gt_in_ego);
  SparseGrid bev2 = cec_expand(cec_expand(bev, 3), 3);
  stats.bev_cells_after = bev2.size();
  stats.center_coverage_after = center_coverage(bev2, gt_in_ego);
  return stats;
}

struct AgentState {
  MemoryQueue memory{4, 256};
};

}  // namespace

PipelineResult run_pipeline(const Scenario& scenario, const PipelineConfig& cfg) {
  if (scenario.agents.empty())
    throw std::invalid_argument("run_pipeline: scenario has no agents");

  PipelineResult result;
  GaussianRng noise_rng(scenario.seed);
  GaussianRng latency_rng(scenario.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<AgentState> states(scenario.agents.size());
  DeliveryQueue delivery;

  std::vector<Frame> eval_frames;
  std::vector<double> translation_errs, rotation_errs;
  std::size_t aligned_frames = 0, coop_attempts = 0;

  const double sweep_time = scenario.agents.front().lidar.sweep_time;
  const int n_frames =
      std::max(1, static_cast<int>(std::floor((scenario.duration + 1e-9) /
                                              scenario.frame_period)));

  for (int frame_idx = 0; frame_idx < n_frames; ++frame_idx) {
    const double t_frame = frame_idx * scenario.frame_period;
    const double t_g = t_frame + sweep_time;  // global timestamp: scan end

    FrameStats fstats;
    fstats.t = t_frame;

    // per-agent local perception
    struct LocalView {
      Pose true_pose;
      Pose noisy_pose;
      std::vector<Query> queries;  // predicted to t_g, local frame
      std::vector<BBox> boxes;
    };
    std::vector<LocalView> views(scenario.agents.size());

    for (std::size_t a = 0; a < scenario.agents.size(); ++a) {
      const AgentSpec& agent = scenario.agents[a];
      LocalView& view = views[a];
      view.true_pose = agent_pose_at(agent, t_frame);
      view.noisy_pose = inject_pose_noise(view.true_pose, scenario.error_model, noise_rng);

      TimedPointCloud scan = lidar_scan(scenario, a, t_frame);
      if (cfg.use_fsa && !scan.empty()) {
        scan = fsa_augment(scan, agent.lidar, cfg.fsa_spacing);
      }

      if (a == 0 && frame_idx == 0) {
        std::vector<BBox> gt_ego;
        for (const BBox& b : ground_truth_at(scenario, t_frame)) {
          gt_ego.push_back(transform_box(b, invert_pose(view.true_pose)));
        }
        result.connectivity = grid_diagnostics(scan, gt_ego);
      }

      const SparseGrid bev = voxelize(scan, 0.4, 2);
      std::vector<Query> queries =
          select_roi_queries(bev, cfg.top_k_queries, cfg.feature_width);
      std::vector<BBox> boxes = detect_boxes(scan, agent.lidar.height_h);

      // temporal alignment to the global timestamp
      if (cfg.compensate_latency) {
        auto [q, b] = compensate_latency(queries, boxes, t_frame, t_g,
                                         states[a].memory);
        view.queries = std::move(q);
        view.boxes = std::move(b);
      } else {
        view.queries = queries;
        view.boxes = boxes;
      }
      states[a].memory.push(std::move(queries), t_frame);
    }

    // cooperative agents broadcast CPMs
    for (std::size_t a = 1; a < scenario.agents.size(); ++a) {
      auto [queries, boxes] =
          select_by_score(views[a].queries, views[a].boxes, scenario.cpm_threshold);
      Cpm cpm;
      cpm.agent_id = scenario.agents[a].agent_id;
      cpm.pose = views[a].noisy_pose;
      cpm.t = t_g;
      cpm.queries = std::move(queries);
      cpm.boxes = std::move(boxes);
      const std::size_t bytes = encode_cpm(cpm).size();
      fstats.cpm_records.emplace_back(cpm.agent_id, cpm.queries.size(),
                                      cpm.boxes.size(), bytes);
      const double latency =
          scenario.latency_min +
          (scenario.latency_max - scenario.latency_min) * latency_rng.uniform();
      delivery.push(std::move(cpm), t_g, latency);
    }

    // ego receives whatever is due this frame and fuses
    const LocalView& ego = views[0];
    std::vector<Query> fused = ego.queries;
    std::vector<BBox> detections = ego.boxes;

    for (Cpm& cpm : delivery.pop_due(t_g)) {
      // sender index from agent id
      std::size_t sender = 0;
      for (std::size_t a = 1; a < scenario.agents.size(); ++a) {
        if (scenario.agents[a].agent_id == cpm.agent_id) sender = a;
      }
      if (sender == 0) continue;

      std::vector<Query> coop_queries = cpm.queries;
      std::vector<BBox> coop_boxes = cpm.boxes;
      if (cfg.compensate_latency && cpm.t < t_g) {
        auto [q, b] = compensate_latency(coop_queries, coop_boxes, cpm.t, t_g,
                                         states[sender].memory);
        coop_queries = std::move(q);
        coop_boxes = std::move(b);
      }

      const Pose prior = compose_pose(invert_pose(ego.noisy_pose), cpm.pose);
      Pose corrected = prior;
      if (cfg.use_pose_align && !ego.boxes.empty() && !coop_boxes.empty()) {
        ++coop_attempts;
        const AlignResult aligned =
            align_agent(ego.boxes, coop_boxes, prior, cfg.align);
        corrected = aligned.corrected;
        if (!aligned.low_confidence) ++aligned_frames;
      } else if (cfg.use_pose_align) {
        ++coop_attempts;
      }

      const Pose true_rel = compose_pose(
          invert_pose(ego.true_pose), agent_pose_at(scenario.agents[sender], t_frame));
      const auto [terr, rerr] = pose_error(corrected, true_rel);
      translation_errs.push_back(terr);
      rotation_errs.push_back(rerr);

      // spatial alignment into the ego frame
      const Mat3 R = yaw_rotation_matrix(corrected.yaw);
      for (Query& q : coop_queries) q.feature = adapt_rotation(q.feature, R);
      const std::vector<Query> snapped =
          snap_to_grid(coop_queries, corrected, cfg.fusion_grid_res);
      FuseConfig fuse;
      fuse.grid_res = cfg.fusion_grid_res;
      fused = knn_fuse(fused, snapped, fuse);

      for (const BBox& b : coop_boxes) detections.push_back(transform_box(b, corrected));
    }

    // evaluate against time-aligned ground truth in the ego frame
    Frame eval;
    const Pose world_to_ego = invert_pose(ego.true_pose);
    for (const BBox& b : ground_truth_at(scenario, std::min(t_g, scenario.duration))) {
      BBox g = transform_box(b, world_to_ego);
      if (g.cx < scenario.range.x_min || g.cx > scenario.range.x_max ||
          g.cy < scenario.range.y_min || g.cy > scenario.range.y_max) {
        continue;
      }
      eval.gts.push_back(g);
    }
    eval.dets = std::move(detections);
    eval_frames.push_back(std::move(eval));

    result.frames.push_back(std::move(fstats));
  }

  result.median_translation_err = median(translation_errs);
  result.median_rotation_err_deg = median(rotation_errs);
  result.correspondence_accuracy =
      coop_attempts == 0
          ? 1.0
          : static_cast<double>(aligned_frames) / static_cast<double>(coop_attempts);

  std::size_t total_gt = 0;
  for (const Frame& f : eval_frames) total_gt += f.gts.size();
  for (double thr : cfg.iou_thresholds) {
    MetricRow row;
    row.experiment_id = cfg.experiment_id;
    row.sweep_value = cfg.sweep_value;
    row.iou_thr = thr;
    row.sorting = cfg.sorting;
    row.ap = total_gt == 0 ? 0.0 : average_precision(eval_frames, thr, cfg.sorting);
    row.median_translation_err = result.median_translation_err;
    row.median_rotation_err_deg = result.median_rotation_err_deg;
    result.metrics.push_back(std::move(row));
  }
  return result;
}

std::vector<double> parse_sweep(const std::string& spec) {
  std::vector<double> out;
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) {
    out.push_back(std::stod(spec));
    return out;
  }
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw std::invalid_argument("sweep spec must be <v> or <a:b:step>: " + spec);
  const double a = std::stod(spec.substr(0, c1));
  const double b = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  const double step = std::stod(spec.substr(c2 + 1));
  if (step <= 0.0) throw std::invalid_argument("sweep step must be > 0");
  for (double v = a; v <= b + 1e-9; v += step) out.push_back(v);
  return out;
}

namespace {

uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

int run_experiment(const RunOptions& options) {
  namespace fs = std::filesystem;
  Scenario base;
  std::string scenario_text;
  try {
    std::ifstream in(options.scenario_path);
    if (!in) {
      std::cerr << "error: cannot open scenario file: " << options.scenario_path << "\n";
      return 2;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    scenario_text = ss.str();
    base = parse_scenario(scenario_text);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::vector<double> epsilons{base.error_model.epsilon};
  std::vector<double> latencies{base.latency_min * 1000.0};
  bool sweep_epsilon = false, sweep_latency = false;
  try {
    if (options.epsilon) {
      epsilons = parse_sweep(*options.epsilon);
      sweep_epsilon = epsilons.size() > 1;
    }
    if (options.latency_ms) {
      latencies = parse_sweep(*options.latency_ms);
      sweep_latency = latencies.size() > 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (sweep_epsilon && sweep_latency) {
    std::cerr << "error: sweep one parameter at a time\n";
    return 2;
  }

  struct Point {
    double epsilon;
    double latency_ms;
    double sweep_value;
  };
  std::vector<Point> points;
  for (double e : epsilons) {
    for (double l : latencies) {
      points.push_back({e, l, sweep_latency ? l : e});
    }
  }

  const std::string scenario_name = fs::path(options.scenario_path).stem().string();

  try {
    // each worker owns its scenario copy; merge preserves sweep order
    std::vector<std::future<PipelineResult>> futures;
    for (const Point& pt : points) {
      Scenario sc = base;
      sc.error_model.epsilon = pt.epsilon;
      sc.latency_min = sc.latency_max = pt.latency_ms / 1000.0;
      if (options.cpm_threshold) sc.cpm_threshold = *options.cpm_threshold;
      if (options.seed) sc.seed = *options.seed;

      PipelineConfig cfg;
      cfg.experiment_id = scenario_name;
      cfg.sorting = options.sorting;
      cfg.use_fsa = !options.no_fsa;
      cfg.compensate_latency = !options.no_compensation;
      cfg.sweep_value = pt.sweep_value;

      futures.push_back(std::async(std::launch::async, [sc, cfg]() {
        return run_pipeline(sc, cfg);
      }));
    }
    std::vector<PipelineResult> results;
    results.reserve(futures.size());
    for (auto& f : futures) results.push_back(f.get());

    fs::create_directories(options.out_dir);
    const fs::path out(options.out_dir);

    {
      std::ofstream csv(out / "metrics.csv");
      csv << metrics_csv_header() << "\n";
      for (const PipelineResult& r : results) {
        for (const MetricRow& row : r.metrics) csv << to_csv_row(row) << "\n";
      }
    }
    {
      std::ofstream csv(out / "cpm_sizes.csv");
      csv << "sweep_value,frame_t,agent_id,n_queries,n_boxes,bytes\n";
      csv.precision(9);
      for (std::size_t i = 0; i < results.size(); ++i) {
        for (const FrameStats& f : results[i].frames) {
          for (const auto& [agent, nq, nb, bytes] : f.cpm_records) {
            csv << points[i].sweep_value << ',' << f.t << ',' << agent << ',' << nq
                << ',' << nb << ',' << bytes << "\n";
          }
        }
      }
    }
    {
      nlohmann::json j = nlohmann::json::array();
      for (std::size_t i = 0; i < results.size(); ++i) {
        const ConnectivityStats& c = results[i].connectivity;
        j.push_back({
            {"sweep_value", points[i].sweep_value},
            {"components_3d", c.raw_3d.component_count},
            {"component_sizes_3d", c.raw_3d.component_sizes},
            {"largest_gap_3d", c.raw_3d.largest_gap},
            {"components_3d_after_cec", c.after_cec_3d.component_count},
            {"center_coverage_before", c.center_coverage_before},
            {"center_coverage_after", c.center_coverage_after},
            {"bev_cells_before", c.bev_cells_before},
            {"bev_cells_after", c.bev_cells_after},
        });
      }
      std::ofstream js(out / "connectivity.json");
      js << j.dump(2) << "\n";
    }
    {
      std::ostringstream config_blob;
      config_blob << scenario_text << '|' << options.epsilon.value_or("")
                  << '|' << options.latency_ms.value_or("") << '|'
                  << (options.cpm_threshold ? std::to_string(*options.cpm_threshold) : "")
                  << '|' << (options.sorting == ScoreSorting::kGlobal ? "global" : "local")
                  << '|' << options.no_fsa << options.no_compensation;
      nlohmann::json manifest = {
          {"scenario", options.scenario_path},
          {"seed", options.seed ? *options.seed : base.seed},
          {"config_hash", fnv1a(config_blob.str())},
          {"format_version", 1},
          {"sweep_points", points.size()},
      };
      std::ofstream js(out / "run_manifest.json");
      js << manifest.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace coopdet
