#pragma once

#include <array>
#include <vector>

#include "coopdet/geometry.hpp"

namespace coopdet {

/// Quadrant anchor angles used by the compass direction code.
constexpr std::array<double, 4> kCompassAnchors = {0.0, 0.5 * kPi, kPi, 1.5 * kPi};

/// Direction code against four anchor angles: per-anchor cos/sin offsets plus
/// angular-proximity scores in [0, 1].
struct CompassCode {
  std::array<double, 4> cos_offsets{};  // cos(r_g) - cos(r_a)
  std::array<double, 4> sin_offsets{};  // sin(r_g) - sin(r_a)
  std::array<double, 4> scores{};       // 1 - angdist(r_g, r_a) / pi
};

CompassCode compass_encode(double r_g);

/// Pick the argmax-score anchor (ties: lowest index) and recover the angle
/// from that anchor's unit vector plus offsets. Throws on degenerate codes.
double compass_decode(const CompassCode& code);

/// Regression targets for one box relative to a query point.
struct BoxTargets {
  double dx = 0.0, dy = 0.0, dz = 0.0;  // box center minus query point
  double l = 0.0, w = 0.0, h = 0.0;
  CompassCode compass;
};

BoxTargets encode_targets(const BBox& box, double qx, double qy, double qz);
BBox decode_targets(const BoxTargets& t, double qx, double qy, double qz);

enum class QueryLabel { kPositive, kNegative };

/// A query is positive iff it lies inside at least one box's BEV rectangle
/// (edge-inclusive).
std::vector<QueryLabel> classify_queries(
    const std::vector<std::pair<double, double>>& queries,
    const std::vector<BBox>& boxes);

/// Alternative angle codecs kept behind one interface for comparison runs.
enum class AngleEncoding { kCompass, kGtAngle, kSecondStyle, kSinCos };

std::vector<double> encode_angle(double r_g, AngleEncoding enc);
double decode_angle(const std::vector<double>& code, AngleEncoding enc);

}  // namespace coopdet
