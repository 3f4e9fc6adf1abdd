#include "coopdet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace coopdet {

double GaussianRng::uniform() {
  return std::generate_canonical<double, 53>(engine_);
}

double GaussianRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * kPi * u2);
}

LidarModel default_lidar_model() {
  LidarModel m;
  m.height_h = 1.9;
  m.azimuth_step = 0.2 * kPi / 180.0;
  m.sweep_time = 0.1;
  m.ring_inclinations.clear();
  const double lo = -25.0 * kPi / 180.0;
  const double hi = 5.0 * kPi / 180.0;
  for (int i = 0; i < 64; ++i) {
    m.ring_inclinations.push_back(lo + (hi - lo) * i / 63.0);
  }
  return m;
}

Pose agent_pose_at(const AgentSpec& agent, double t) {
  return Pose(agent.start.x + agent.vx * t, agent.start.y + agent.vy * t,
              agent.start.z, agent.start.yaw + agent.yaw_rate * t);
}

BBox vehicle_box_at(const VehicleSpec& v, double t) {
  BBox b = v.box;
  b.cx += v.vx * t;
  b.cy += v.vy * t;
  b.yaw = wrap_angle(b.yaw + v.yaw_rate * t);
  b.t = t;
  return b;
}

std::vector<BBox> ground_truth_at(const Scenario& scene, double t_g) {
  if (t_g < 0.0 || t_g > scene.duration + 1e-9)
    throw std::invalid_argument("ground_truth_at: t_g outside scenario duration");
  std::vector<BBox> out;
  out.reserve(scene.vehicles.size());
  for (const VehicleSpec& v : scene.vehicles) {
    BBox b = vehicle_box_at(v, t_g);
    b.score = 1.0;
    out.push_back(b);
  }
  return out;
}

namespace {

// nearest positive ray parameter for an axis-aligned slab test in box frame
std::optional<double> ray_box_hit(double ox, double oy, double oz, double dx,
                                  double dy, double dz, const BBox& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // into box frame
  const double rx = ox - box.cx, ry = oy - box.cy, rz = oz - box.cz;
  const double lox = c * rx + s * ry;
  const double loy = -s * rx + c * ry;
  const double ldx = c * dx + s * dy;
  const double ldy = -s * dx + c * dy;

  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  const double half[3] = {0.5 * box.l, 0.5 * box.w, 0.5 * box.h};
  const double o[3] = {lox, loy, rz};
  const double d[3] = {ldx, ldy, dz};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (std::abs(o[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t0 = (-half[a] - o[a]) / d[a];
    double t1 = (half[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::nullopt;
  }
  if (tmin <= 1e-9) return std::nullopt;  // sensor inside or behind the box
  return tmin;
}

}  // namespace

TimedPointCloud lidar_scan(const Scenario& scene, std::size_t agent_idx,
                           double t_start) {
  const AgentSpec& agent = scene.agents.at(agent_idx);
  const LidarModel& lidar = agent.lidar;
  if (!lidar.valid()) throw std::invalid_argument("lidar_scan: invalid lidar model");

  const Pose sensor = agent_pose_at(agent, t_start);  // frozen for the sweep
  const Pose world_to_sensor = invert_pose(sensor);
  const double max_range = 250.0;

  TimedPointCloud out;
  out.frame = std::to_string(agent.agent_id);

  for (double az = 0.0; az < 2.0 * kPi - 1e-12; az += lidar.azimuth_step) {
    const double t_ray = t_start + (az / (2.0 * kPi)) * lidar.sweep_time;
    const double world_az = sensor.yaw + az;
    for (double inc : lidar.ring_inclinations) {
      const double ci = std::cos(inc);
      const double dx = ci * std::cos(world_az);
      const double dy = ci * std::sin(world_az);
      const double dz = std::sin(inc);

      double best_t = max_range;
      bool hit = false;
      for (const VehicleSpec& v : scene.vehicles) {
        const BBox box = vehicle_box_at(v, t_ray);
        if (const auto th = ray_box_hit(sensor.x, sensor.y, sensor.z, dx, dy, dz, box)) {
          if (*th < best_t) {
            best_t = *th;
            hit = true;
          }
        }
      }
      if (!hit && dz < -1e-9) {
        const double tg = -sensor.z / dz;  // ground plane z = 0
        if (tg > 0.0 && tg < best_t) {
          best_t = tg;
          hit = true;
        }
      }
      if (!hit) continue;

      TimedPoint p;
      p.x = sensor.x + dx * best_t;
      p.y = sensor.y + dy * best_t;
      p.z = sensor.z + dz * best_t;
      p.t = t_ray;
      apply_pose(world_to_sensor, p.x, p.y, p.z);
      if (p.x < scene.range.x_min || p.x > scene.range.x_max ||
          p.y < scene.range.y_min || p.y > scene.range.y_max) {
        continue;
      }
      out.points.push_back(p);
    }
  }
  return out;
}

Pose inject_pose_noise(const Pose& p, const ErrorModel& em, GaussianRng& rng) {
  const double nx = rng.normal();
  const double ny = rng.normal();
  const double nr = rng.normal();
  if (em.epsilon == 0.0) return p;
  return Pose(p.x + nx * em.epsilon, p.y + ny * em.epsilon, p.z,
              p.yaw + nr * em.epsilon * kPi / 180.0);
}

void DeliveryQueue::push(Cpm cpm, double t_send, double latency) {
  if (latency < 0.0) throw std::invalid_argument("DeliveryQueue: latency must be >= 0");
  events_.push_back({t_send + latency, next_sequence_++, std::move(cpm)});
}

std::vector<Cpm> DeliveryQueue::pop_due(double t_now) {
  std::vector<Delivery> due, rest;
  for (Delivery& e : events_) {
    (e.deliver_at <= t_now + 1e-12 ? due : rest).push_back(std::move(e));
  }
  events_ = std::move(rest);
  std::stable_sort(due.begin(), due.end(), [](const Delivery& a, const Delivery& b) {
    if (a.deliver_at != b.deliver_at) return a.deliver_at < b.deliver_at;
    return a.sequence < b.sequence;
  });
  std::vector<Cpm> out;
  out.reserve(due.size());
  for (Delivery& e : due) out.push_back(std::move(e.cpm));
  return out;
}

std::vector<Query> select_roi_queries(const SparseGrid& bev, int top_k,
                                      std::size_t feature_width) {
  if (bev.dims() != 2)
    throw std::invalid_argument("select_roi_queries: BEV grid required");
  if (feature_width < 9)
    throw std::invalid_argument("select_roi_queries: feature width must cover the rotation suffix");

  std::vector<std::size_t> order(bev.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bev.features()[a][0] > bev.features()[b][0];  // point count
  });
  if (static_cast<int>(order.size()) > top_k) order.resize(static_cast<std::size_t>(top_k));

  double max_count = 1.0;
  for (std::size_t i : order) max_count = std::max(max_count, bev.features()[i][0]);

  std::vector<Query> out;
  out.reserve(order.size());
  for (std::size_t i : order) {
    const Coord& c = bev.coords()[i];
    const std::vector<double>& f = bev.features()[i];
    Query q;
    q.x = (c[0] + 0.5) * bev.voxel_size();
    q.y = (c[1] + 0.5) * bev.voxel_size();
    q.score = f[0] / max_count;
    q.t = 0.5 * (f[4] + f[5]);  // midpoint of the cell's time span
    q.feature.assign(feature_width, 0.0f);
    for (std::size_t k = 0; k < f.size() && k < feature_width - 9; ++k) {
      q.feature[k] = static_cast<float>(f[k]);
    }
    out.push_back(std::move(q));
  }
  return out;
}

MinAreaRect min_area_rect(const std::vector<std::pair<double, double>>& pts) {
  if (pts.empty()) throw std::invalid_argument("min_area_rect: no points");

  // Andrew monotone chain convex hull
  std::vector<std::pair<double, double>> p = pts;
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                  const std::pair<double, double>& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> hull;
  if (p.size() < 3) {
    hull = p;
  } else {
    hull.resize(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
      hull[k++] = p[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = p.size() - 1; i-- > 0;) {
      while (k >= lower && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
      hull[k++] = p[i];
    }
    hull.resize(k - 1);
  }

  if (hull.size() == 1) {
    return {hull[0].first, hull[0].second, 0.0, 0.0, 0.0};
  }

  MinAreaRect best;
  double best_area = std::numeric_limits<double>::infinity();
  const std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % n];
    const double theta = std::atan2(b.second - a.second, b.first - a.first);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (const auto& q : hull) {
      const double u = c * q.first + s * q.second;
      const double v = -s * q.first + c * q.second;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    const double du = umax - umin;
    const double dv = vmax - vmin;
    const double area = du * dv;
    if (area < best_area - 1e-12) {
      best_area = area;
      const double cu = 0.5 * (umin + umax);
      const double cv = 0.5 * (vmin + vmax);
      best.cx = c * cu - s * cv;
      best.cy = s * cu + c * cv;
      if (du >= dv) {
        best.l = du;
        best.w = dv;
        best.yaw = wrap_angle(theta);
      } else {
        best.l = dv;
        best.w = du;
        best.yaw = wrap_angle(theta + 0.5 * kPi);
      }
    }
  }
  return best;
}

std::vector<BBox> detect_boxes(const TimedPointCloud& pc, double sensor_height,
                               const DetectorConfig& cfg) {
  // above-ground, non-augmented points only
  TimedPointCloud obstacles;
  obstacles.frame = pc.frame;
  for (const TimedPoint& p : pc.points) {
    if (!p.free_space && p.z > -sensor_height + cfg.ground_margin) {
      obstacles.points.push_back(p);
    }
  }
  if (obstacles.empty()) return {};

  const SparseGrid bev = voxelize(obstacles, cfg.voxel_size, 2);

  // cluster cells by BEV connectivity
  std::unordered_map<Coord, int, CoordHash> cell_cluster;
  {
    int next = 0;
    std::unordered_map<Coord, bool, CoordHash> active;
    for (const Coord& c : bev.coords()) active[c] = true;
    for (const Coord& seed : bev.coords()) {
      if (cell_cluster.count(seed)) continue;
      std::vector<Coord> stack{seed};
      cell_cluster[seed] = next;
      while (!stack.empty()) {
        Coord c = stack.back();
        stack.pop_back();
        for (int dx = -1; dx <= 1; ++dx) {
          for (int dy = -1; dy <= 1; ++dy) {
            if (dx == 0 && dy == 0) continue;
            Coord nb = {c[0] + dx, c[1] + dy, 0};
            if (active.count(nb) && !cell_cluster.count(nb)) {
              cell_cluster[nb] = next;
              stack.push_back(nb);
            }
          }
        }
      }
      ++next;
    }
  }

  // gather points per cluster
  std::map<int, std::vector<const TimedPoint*>> clusters;
  for (const TimedPoint& p : obstacles.points) {
    Coord c = {static_cast<int32_t>(std::floor(p.x / cfg.voxel_size)),
               static_cast<int32_t>(std::floor(p.y / cfg.voxel_size)), 0};
    clusters[cell_cluster.at(c)].push_back(&p);
  }

  std::vector<BBox> out;
  for (const auto& [id, points] : clusters) {
    if (static_cast<int>(points.size()) < cfg.min_points) continue;
    std::vector<std::pair<double, double>> xy;
    xy.reserve(points.size());
    double z_lo = std::numeric_limits<double>::infinity(), z_hi = -z_lo;
    double t_sum = 0.0;
    for (const TimedPoint* p : points) {
      xy.emplace_back(p->x, p->y);
      z_lo = std::min(z_lo, p->z);
      z_hi = std::max(z_hi, p->z);
      t_sum += p->t;
    }
    const MinAreaRect r = min_area_rect(xy);

    double cx = r.cx, cy = r.cy;
    double e_l = std::max(r.l, cfg.voxel_size);
    double e_w = std::max(r.w, cfg.voxel_size);
    double yaw_l = r.yaw;
    double yaw_w = wrap_angle(r.yaw + 0.5 * kPi);
    if (e_l < 0.75 * cfg.length_prior) {
      // face-only view: the visible extent is the vehicle's width
      std::swap(e_l, e_w);
      std::swap(yaw_l, yaw_w);
    }
    auto extend = [&](double axis_yaw, double extent, double prior) {
      if (extent >= prior) return extent;
      const double ax = std::cos(axis_yaw);
      const double ay = std::sin(axis_yaw);
      const double dir = (cx * ax + cy * ay) >= 0.0 ? 1.0 : -1.0;  // away from sensor
      cx += dir * ax * 0.5 * (prior - extent);
      cy += dir * ay * 0.5 * (prior - extent);
      return prior;
    };
    e_l = extend(yaw_l, e_l, cfg.length_prior);
    e_w = extend(yaw_w, e_w, cfg.width_prior);

    BBox b;
    b.cx = cx;
    b.cy = cy;
    if (e_l >= e_w) {
      b.l = e_l;
      b.w = e_w;
      b.yaw = yaw_l;
    } else {
      b.l = e_w;
      b.w = e_l;
      b.yaw = yaw_w;
    }
    b.h = std::max(z_hi - z_lo, cfg.default_height);
    // ground-level bottom: scans see surfaces, not the underside
    b.cz = (-sensor_height) + 0.5 * b.h;
    b.score = 1.0 - std::exp(-static_cast<double>(points.size()) / 50.0);
    b.t = t_sum / static_cast<double>(points.size());
    out.push_back(b);
  }
  return out;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  LidarModel lidar = default_lidar_model();

  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) continue;

    try {
      const std::string& key = tok[0];
      if (key == "seed" && tok.size() == 2) {
        sc.seed = std::stoull(tok[1]);
      } else if (key == "duration" && tok.size() == 2) {
        sc.duration = std::stod(tok[1]);
      } else if (key == "frame_period" && tok.size() == 2) {
        sc.frame_period = std::stod(tok[1]);
      } else if (key == "epsilon" && tok.size() == 2) {
        sc.error_model.epsilon = std::stod(tok[1]);
      } else if (key == "latency_ms" && tok.size() == 3) {
        sc.latency_min = std::stod(tok[1]) / 1000.0;
        sc.latency_max = std::stod(tok[2]) / 1000.0;
      } else if (key == "cpm_threshold" && tok.size() == 2) {
        sc.cpm_threshold = std::stod(tok[1]);
      } else if (key == "range" && tok.size() == 5) {
        sc.range = {std::stod(tok[1]), std::stod(tok[2]), std::stod(tok[3]),
                    std::stod(tok[4])};
      } else if (key == "lidar" && tok.size() == 5) {
        // lidar <height> <rings> <azimuth_step_deg> <sweep_time>
        lidar.height_h = std::stod(tok[1]);
        const int rings = std::stoi(tok[2]);
        if (rings < 1) fail("lidar needs >= 1 ring");
        lidar.ring_inclinations.clear();
        const double lo = -25.0 * kPi / 180.0;
        const double hi = 5.0 * kPi / 180.0;
        for (int i = 0; i < rings; ++i) {
          lidar.ring_inclinations.push_back(
              rings == 1 ? lo : lo + (hi - lo) * i / (rings - 1));
        }
        lidar.azimuth_step = std::stod(tok[3]) * kPi / 180.0;
        lidar.sweep_time = std::stod(tok[4]);
      } else if (key == "agent" && tok.size() == 8) {
        // agent <id> <x> <y> <yaw_deg> <vx> <vy> <yaw_rate>
        AgentSpec a;
        a.agent_id = static_cast<uint32_t>(std::stoul(tok[1]));
        a.start = Pose(std::stod(tok[2]), std::stod(tok[3]), lidar.height_h,
                       std::stod(tok[4]) * kPi / 180.0);
        a.vx = std::stod(tok[5]);
        a.vy = std::stod(tok[6]);
        a.yaw_rate = std::stod(tok[7]);
        a.lidar = lidar;
        sc.agents.push_back(std::move(a));
      } else if (key == "vehicle" && tok.size() == 11) {
        // vehicle <cx> <cy> <cz> <l> <w> <h> <yaw_deg> <vx> <vy> <yaw_rate>
        VehicleSpec v;
        v.box.cx = std::stod(tok[1]);
        v.box.cy = std::stod(tok[2]);
        v.box.cz = std::stod(tok[3]);
        v.box.l = std::stod(tok[4]);
        v.box.w = std::stod(tok[5]);
        v.box.h = std::stod(tok[6]);
        v.box.yaw = wrap_angle(std::stod(tok[7]) * kPi / 180.0);
        v.vx = std::stod(tok[8]);
        v.vy = std::stod(tok[9]);
        v.yaw_rate = std::stod(tok[10]);
        if (!v.box.valid()) fail("vehicle dimensions must be positive");
        sc.vehicles.push_back(std::move(v));
      } else {
        fail("unknown directive or wrong field count: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      fail(std::string("parse error: ") + e.what());
    }
  }

  if (sc.agents.empty()) throw std::invalid_argument("scenario: needs at least one agent");
  if (sc.frame_period <= 0.0) throw std::invalid_argument("scenario: frame_period must be > 0");
  if (sc.latency_max < sc.latency_min)
    throw std::invalid_argument("scenario: latency_max < latency_min");
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<uint8_t> dump_scan(const TimedPointCloud& pc) {
  std::vector<uint8_t> out;
  out.reserve(pc.points.size() * 16);
  auto put = [&](float v) {
    const auto* b = reinterpret_cast<const uint8_t*>(&v);
    out.insert(out.end(), b, b + 4);
  };
  for (const TimedPoint& p : pc.points) {
    put(static_cast<float>(p.x));
    put(static_cast<float>(p.y));
    put(static_cast<float>(p.z));
    put(static_cast<float>(p.t));
  }
  return out;
}

TimedPointCloud read_scan(const std::vector<uint8_t>& bytes) {
  if (bytes.size() % 16 != 0)
    throw std::invalid_argument("read_scan: byte count is not a multiple of 16");
  TimedPointCloud pc;
  pc.points.resize(bytes.size() / 16);
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    float v[4];
    std::memcpy(v, bytes.data() + i * 16, 16);
    pc.points[i] = {v[0], v[1], v[2], v[3], false};
  }
  return pc;
}

}  // namespace coopdet
