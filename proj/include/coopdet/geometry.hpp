#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace coopdet {

constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to the half-open interval [-pi, pi). Ties at +pi map to -pi.
double wrap_angle(double a);

/// Planar-rigid agent pose: translation in 3D, rotation about z only.
/// z is carried through compositions but never rotated.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;  // radians, normalized to [-pi, pi)

  Pose() = default;
  Pose(double x_, double y_, double z_, double yaw_)
      : x(x_), y(y_), z(z_), yaw(wrap_angle(yaw_)) {}

  static Pose identity() { return Pose(); }
};

/// Result applies b first, then a (homogeneous matrix product a*b).
Pose compose_pose(const Pose& a, const Pose& b);
Pose invert_pose(const Pose& p);

/// Apply pose T to a point (rotation about z, then translation).
void apply_pose(const Pose& T, double& x, double& y, double& z);

/// Oriented 3D box with score and timestamp.
struct BBox {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double l = 0.0, w = 0.0, h = 0.0;
  double yaw = 0.0;
  double score = 1.0;
  double t = 0.0;

  bool valid() const { return l > 0.0 && w > 0.0 && h > 0.0; }
};

/// BEV footprint corners, counter-clockwise.
std::vector<std::pair<double, double>> bev_corners(const BBox& b);

/// Whether (x, y) lies inside (or on the boundary of) the BEV rectangle.
bool point_in_bev(const BBox& b, double x, double y);

/// Intersection-over-union of the BEV rectangles (oriented), in [0, 1].
double bev_iou(const BBox& a, const BBox& b);

/// 3D IoU: BEV intersection area times vertical overlap over union volume.
double iou_3d(const BBox& a, const BBox& b);

/// Area of the intersection of two convex polygons (Sutherland-Hodgman clip +
/// shoelace). Vertices closer than 1e-12 are merged.
double convex_intersection_area(const std::vector<std::pair<double, double>>& p,
                                const std::vector<std::pair<double, double>>& q);

struct TimedPoint {
  double x = 0.0, y = 0.0, z = 0.0;
  double t = 0.0;
  bool free_space = false;  // set for augmentation points, not sensor returns
};

struct TimedPointCloud {
  std::vector<TimedPoint> points;
  std::string frame = "ego";

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

/// Rigidly transform every point by T; timestamps and flags are unchanged.
TimedPointCloud transform_points(const TimedPointCloud& pc, const Pose& T,
                                 const std::string& new_frame);

/// Move a box by T: center transformed, yaw rotated, dims unchanged.
BBox transform_box(const BBox& b, const Pose& T);

}  // namespace coopdet
