#include "coopdet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coopdet {

bool LidarModel::valid() const {
  if (height_h <= 0.0 || azimuth_step <= 0.0 || sweep_time <= 0.0) return false;
  for (std::size_t i = 1; i < ring_inclinations.size(); ++i) {
    if (ring_inclinations[i] <= ring_inclinations[i - 1]) return false;
  }
  return true;
}

double LidarModel::ground_radius(double inclination) const {
  if (inclination >= 0.0) return -1.0;
  return height_h / std::tan(-inclination);
}

double fsa_gap(double d_i, double h, double alpha) {
  if (d_i <= 0.0 || h <= 0.0)
    throw std::domain_error("fsa_gap: d_i and h must be positive");
  const double inner = std::atan(d_i / h) - alpha;
  if (inner <= 0.0)
    throw std::domain_error("fsa_gap: previous ray does not hit the ground");
  return d_i - h * std::tan(inner);
}

TimedPointCloud fsa_augment(const TimedPointCloud& pc, const LidarModel& model,
                            double spacing) {
  if (spacing <= 0.0) throw std::invalid_argument("fsa_augment: spacing must be > 0");
  if (!model.valid()) throw std::invalid_argument("fsa_augment: invalid lidar model");
  if (pc.empty()) return pc;

  // ground radii of downward rays, ascending with inclination
  std::vector<double> radii;
  for (double inc : model.ring_inclinations) {
    const double r = model.ground_radius(inc);
    if (r > 0.0) radii.push_back(r);
  }

  double t_start = std::numeric_limits<double>::infinity();
  for (const TimedPoint& p : pc.points) t_start = std::min(t_start, p.t);

  TimedPointCloud out = pc;
  const double h = model.height_h;
  for (double az = 0.0; az < 2.0 * kPi - 1e-12; az += model.azimuth_step) {
    const double t = t_start + (az / (2.0 * kPi)) * model.sweep_time;
    const double ca = std::cos(az);
    const double sa = std::sin(az);
    for (std::size_t i = 1; i < radii.size(); ++i) {
      const double r0 = radii[i - 1];
      const double r1 = radii[i];
      const double gap = r1 - r0;
      const int n = static_cast<int>(std::ceil(gap / spacing)) - 1;
      for (int j = 1; j <= n; ++j) {
        const double r = r0 + gap * static_cast<double>(j) / static_cast<double>(n + 1);
        TimedPoint p;
        p.x = r * ca;
        p.y = r * sa;
        p.z = -h;
        p.t = t;
        p.free_space = true;
        out.points.push_back(p);
      }
    }
  }
  return out;
}

std::pair<TimedPointCloud, std::vector<BBox>> flip_rotate(
    const TimedPointCloud& pc, const std::vector<BBox>& boxes, bool flip_x,
    bool flip_y, double yaw) {
  if (yaw < -kPi / 2.0 - 1e-12 || yaw > kPi / 2.0 + 1e-12)
    throw std::invalid_argument("flip_rotate: yaw must be in [-pi/2, pi/2]");
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);

  auto map_xy = [&](double& x, double& y) {
    if (flip_x) x = -x;
    if (flip_y) y = -y;
    const double nx = c * x - s * y;
    const double ny = s * x + c * y;
    x = nx;
    y = ny;
  };

  TimedPointCloud out_pc = pc;
  for (TimedPoint& p : out_pc.points) map_xy(p.x, p.y);

  std::vector<BBox> out_boxes = boxes;
  for (BBox& b : out_boxes) {
    map_xy(b.cx, b.cy);
    double phi = b.yaw;
    if (flip_x) phi = kPi - phi;  // mirror across the y-axis
    if (flip_y) phi = -phi;       // mirror across the x-axis
    b.yaw = wrap_angle(phi + yaw);
  }
  return {std::move(out_pc), std::move(out_boxes)};
}

}  // namespace coopdet
