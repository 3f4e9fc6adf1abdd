#include "coopdet/geometry.hpp"

#include <algorithm>

namespace coopdet {

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

Pose compose_pose(const Pose& a, const Pose& b) {
  const double c = std::cos(a.yaw);
  const double s = std::sin(a.yaw);
  Pose r;
  r.x = a.x + c * b.x - s * b.y;
  r.y = a.y + s * b.x + c * b.y;
  r.z = a.z + b.z;
  r.yaw = wrap_angle(a.yaw + b.yaw);
  return r;
}

Pose invert_pose(const Pose& p) {
  const double c = std::cos(p.yaw);
  const double s = std::sin(p.yaw);
  Pose r;
  // R(-yaw) * (-t)
  r.x = -(c * p.x + s * p.y);
  r.y = -(-s * p.x + c * p.y);
  r.z = -p.z;
  r.yaw = wrap_angle(-p.yaw);
  return r;
}

void apply_pose(const Pose& T, double& x, double& y, double& z) {
  const double c = std::cos(T.yaw);
  const double s = std::sin(T.yaw);
  const double nx = T.x + c * x - s * y;
  const double ny = T.y + s * x + c * y;
  x = nx;
  y = ny;
  z += T.z;
}

std::vector<std::pair<double, double>> bev_corners(const BBox& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  // local corners, counter-clockwise
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  std::vector<std::pair<double, double>> out(4);
  for (int i = 0; i < 4; ++i) {
    out[i] = {b.cx + c * lx[i] - s * ly[i], b.cy + s * lx[i] + c * ly[i]};
  }
  return out;
}

bool point_in_bev(const BBox& b, double x, double y) {
  // test in the box frame; edge-inclusive
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double dx = x - b.cx;
  const double dy = y - b.cy;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  const double eps = 1e-12;
  return std::abs(lx) <= 0.5 * b.l + eps && std::abs(ly) <= 0.5 * b.w + eps;
}

namespace {

using Pt = std::pair<double, double>;

double cross(const Pt& o, const Pt& a, const Pt& b) {
  return (a.first - o.first) * (b.second - o.second) -
         (a.second - o.second) * (b.first - o.first);
}

double shoelace(const std::vector<Pt>& poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % n];
    a += p.first * q.second - q.first * p.second;
  }
  return 0.5 * std::abs(a);
}

std::vector<Pt> dedupe(const std::vector<Pt>& poly) {
  std::vector<Pt> out;
  for (const Pt& p : poly) {
    if (out.empty() || std::abs(p.first - out.back().first) > 1e-12 ||
        std::abs(p.second - out.back().second) > 1e-12) {
      out.push_back(p);
    }
  }
  if (out.size() > 1 && std::abs(out.front().first - out.back().first) <= 1e-12 &&
      std::abs(out.front().second - out.back().second) <= 1e-12) {
    out.pop_back();
  }
  return out;
}

// clip subject polygon against the half-plane left of edge (a, b)
std::vector<Pt> clip_edge(const std::vector<Pt>& subject, const Pt& a, const Pt& b) {
  std::vector<Pt> out;
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pt& cur = subject[i];
    const Pt& nxt = subject[(i + 1) % n];
    const double dc = cross(a, b, cur);
    const double dn = cross(a, b, nxt);
    if (dc >= 0.0) out.push_back(cur);
    if ((dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0)) {
      const double s = dc / (dc - dn);
      out.push_back({cur.first + s * (nxt.first - cur.first),
                     cur.second + s * (nxt.second - cur.second)});
    }
  }
  return out;
}

// ensure counter-clockwise orientation
std::vector<Pt> ccw(std::vector<Pt> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pt& p = poly[i];
    const Pt& q = poly[(i + 1) % poly.size()];
    a += p.first * q.second - q.first * p.second;
  }
  if (a < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

}  // namespace

double convex_intersection_area(const std::vector<Pt>& p, const std::vector<Pt>& q) {
  if (p.size() < 3 || q.size() < 3) return 0.0;
  std::vector<Pt> subject = ccw(p);
  const std::vector<Pt> clipper = ccw(q);
  for (std::size_t i = 0; i < clipper.size() && subject.size() >= 3; ++i) {
    subject = clip_edge(subject, clipper[i], clipper[(i + 1) % clipper.size()]);
    subject = dedupe(subject);
  }
  if (subject.size() < 3) return 0.0;
  return shoelace(subject);
}

double bev_iou(const BBox& a, const BBox& b) {
  const double area_a = a.l * a.w;
  const double area_b = b.l * b.w;
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double inter = convex_intersection_area(bev_corners(a), bev_corners(b));
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const BBox& a, const BBox& b) {
  const double vol_a = a.l * a.w * a.h;
  const double vol_b = b.l * b.w * b.h;
  if (vol_a <= 0.0 || vol_b <= 0.0) return 0.0;
  const double inter_area = convex_intersection_area(bev_corners(a), bev_corners(b));
  const double z_lo = std::max(a.cz - 0.5 * a.h, b.cz - 0.5 * b.h);
  const double z_hi = std::min(a.cz + 0.5 * a.h, b.cz + 0.5 * b.h);
  const double dz = std::max(0.0, z_hi - z_lo);
  const double inter = inter_area * dz;
  const double uni = vol_a + vol_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

TimedPointCloud transform_points(const TimedPointCloud& pc, const Pose& T,
                                 const std::string& new_frame) {
  TimedPointCloud out;
  out.frame = new_frame;
  out.points.reserve(pc.points.size());
  for (const TimedPoint& p : pc.points) {
    TimedPoint q = p;
    apply_pose(T, q.x, q.y, q.z);
    out.points.push_back(q);
  }
  return out;
}

BBox transform_box(const BBox& b, const Pose& T) {
  BBox out = b;
  apply_pose(T, out.cx, out.cy, out.cz);
  out.yaw = wrap_angle(b.yaw + T.yaw);
  return out;
}

}  // namespace coopdet
