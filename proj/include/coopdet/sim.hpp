#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coopdet/augment.hpp"
#include "coopdet/cpm.hpp"
#include "coopdet/geometry.hpp"
#include "coopdet/sparse_grid.hpp"
#include "coopdet/temporal_align.hpp"

namespace coopdet {

/// Deterministic normal deviates (Box-Muller over mt19937_64), independent of
/// the standard library's distribution implementation.
class GaussianRng {
 public:
  explicit GaussianRng(uint64_t seed) : engine_(seed) {}
  double normal();
  double uniform();  // in [0, 1)

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct AgentSpec {
  uint32_t agent_id = 0;
  Pose start;  // z is the sensor height above ground
  double vx = 0.0, vy = 0.0;
  double yaw_rate = 0.0;
  LidarModel lidar;
};

struct VehicleSpec {
  BBox box;  // pose at t = 0
  double vx = 0.0, vy = 0.0;
  double yaw_rate = 0.0;
};

struct ErrorModel {
  double epsilon = 0.0;  // scale factor in [0, 1]
};

struct DetectionRange {
  double x_min = -140.0, x_max = 140.0;
  double y_min = -40.0, y_max = 40.0;
};

struct Scenario {
  uint64_t seed = 0;
  std::vector<AgentSpec> agents;  // agents[0] is the ego
  std::vector<VehicleSpec> vehicles;
  double duration = 1.0;
  double frame_period = 0.1;
  ErrorModel error_model;
  double latency_min = 0.0;  // seconds
  double latency_max = 0.0;
  double cpm_threshold = 0.0;
  DetectionRange range;
};

/// 64-ring scanner defaults; inclinations span [-25, 5] degrees.
LidarModel default_lidar_model();

Pose agent_pose_at(const AgentSpec& agent, double t);
BBox vehicle_box_at(const VehicleSpec& v, double t);

/// Exact vehicle boxes at the global timestamp t_g (scores 1, t = t_g).
std::vector<BBox> ground_truth_at(const Scenario& scene, double t_g);

/// Rolling-shutter range scan in the agent's sensor frame at t_start. Each
/// azimuth column carries t = t_start + (azimuth / 2pi) * sweep_time; vehicles
/// are evaluated at each ray's timestamp, so moving objects smear. Rays return
/// the nearest box surface or the ground plane; occlusion falls out of the
/// nearest-hit rule. Points outside the detection range are dropped.
TimedPointCloud lidar_scan(const Scenario& scene, std::size_t agent_idx,
                           double t_start);

/// x += N(0,1)*eps, y += N(0,1)*eps, yaw += N(0,1)*eps degrees.
Pose inject_pose_noise(const Pose& p, const ErrorModel& em, GaussianRng& rng);

struct Delivery {
  double deliver_at = 0.0;
  uint64_t sequence = 0;
  Cpm cpm;
};

/// Event queue ordered by delivery time, FIFO among equal times.
class DeliveryQueue {
 public:
  void push(Cpm cpm, double t_send, double latency);
  std::vector<Cpm> pop_due(double t_now);
  std::size_t pending() const { return events_.size(); }

 private:
  std::vector<Delivery> events_;
  uint64_t next_sequence_ = 0;
};

/// Density-scored RoI selection: the top_k most populated BEV cells become
/// queries. Feature layout: grid feature channels first, zero fill, 9-slot
/// rotation suffix reserved at the end. Stand-in for a learned RoI head.
std::vector<Query> select_roi_queries(const SparseGrid& bev, int top_k,
                                      std::size_t feature_width);

/// Geometric detector stand-in: clusters above-ground points on a BEV grid and
/// fits an oriented minimum-area rectangle per cluster.
/// Scans see surfaces, not whole objects, so fitted rectangles are completed
/// toward typical vehicle dimensions: undersized extents grow away from the
/// sensor, and a face-only cluster is treated as the vehicle's width.
struct DetectorConfig {
  double voxel_size = 0.4;
  double ground_margin = 0.3;  // meters above the ground plane
  int min_points = 5;
  double default_height = 1.6;
  double length_prior = 4.2;
  double width_prior = 1.9;
};

std::vector<BBox> detect_boxes(const TimedPointCloud& pc, double sensor_height,
                               const DetectorConfig& cfg = {});

/// Oriented minimum-area bounding rectangle of 2D points (convex hull +
/// rotating calipers). Returns center, length (>= width), width, yaw.
struct MinAreaRect {
  double cx = 0.0, cy = 0.0;
  double l = 0.0, w = 0.0;
  double yaw = 0.0;
};
MinAreaRect min_area_rect(const std::vector<std::pair<double, double>>& pts);

/// Plain-text scenario config, one directive per line (see README).
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Binary scan dump: per point x, y, z, t as little-endian f32.
std::vector<uint8_t> dump_scan(const TimedPointCloud& pc);
TimedPointCloud read_scan(const std::vector<uint8_t>& bytes);

}  // namespace coopdet
