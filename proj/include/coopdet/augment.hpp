#pragma once

#include <vector>

#include "coopdet/geometry.hpp"

namespace coopdet {

/// Rotating multi-ring range scanner mounted height_h above flat ground.
struct LidarModel {
  double height_h = 1.9;                    // meters above ground
  std::vector<double> ring_inclinations;    // radians, strictly increasing
  double azimuth_step = 0.2 * kPi / 180.0;  // radians
  double sweep_time = 0.1;                  // seconds per full revolution

  bool valid() const;

  /// Ground-plane radius of a ring, or a negative value if the ray never
  /// reaches the ground (inclination >= 0).
  double ground_radius(double inclination) const;
};

/// Radial gap on the ground plane between a ray hitting at distance d_i and
/// the next ray one inclination step alpha above it:
///   delta = d_i - h * tan(atan(d_i / h) - alpha)
double fsa_gap(double d_i, double h, double alpha);

/// Insert free-space marker points on the ground plane between consecutive
/// ring ground radii, at most `spacing` apart, strictly inside each gap.
/// Timestamps follow the azimuth position within the sweep.
TimedPointCloud fsa_augment(const TimedPointCloud& pc, const LidarModel& model,
                            double spacing);

/// Geometric augmentation: axis flips followed by a z rotation, applied
/// consistently to points and boxes.
std::pair<TimedPointCloud, std::vector<BBox>> flip_rotate(
    const TimedPointCloud& pc, const std::vector<BBox>& boxes, bool flip_x,
    bool flip_y, double yaw);

}  // namespace coopdet
