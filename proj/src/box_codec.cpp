#include "coopdet/box_codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coopdet {

CompassCode compass_encode(double r_g) {
  CompassCode code;
  const double cg = std::cos(r_g);
  const double sg = std::sin(r_g);
  for (std::size_t a = 0; a < kCompassAnchors.size(); ++a) {
    const double ca = std::cos(kCompassAnchors[a]);
    const double sa = std::sin(kCompassAnchors[a]);
    code.cos_offsets[a] = cg - ca;
    code.sin_offsets[a] = sg - sa;
    code.scores[a] = 1.0 - std::acos(std::clamp(ca * cg + sa * sg, -1.0, 1.0)) / kPi;
  }
  return code;
}

double compass_decode(const CompassCode& code) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < code.scores.size(); ++a) {
    if (code.scores[a] > code.scores[best]) best = a;
  }
  const double cx = std::cos(kCompassAnchors[best]) + code.cos_offsets[best];
  const double sy = std::sin(kCompassAnchors[best]) + code.sin_offsets[best];
  if (std::hypot(cx, sy) < 1e-9)
    throw std::domain_error("compass_decode: degenerate direction vector");
  return wrap_angle(std::atan2(sy, cx));
}

BoxTargets encode_targets(const BBox& box, double qx, double qy, double qz) {
  BoxTargets t;
  t.dx = box.cx - qx;
  t.dy = box.cy - qy;
  t.dz = box.cz - qz;
  t.l = box.l;
  t.w = box.w;
  t.h = box.h;
  t.compass = compass_encode(box.yaw);
  return t;
}

BBox decode_targets(const BoxTargets& t, double qx, double qy, double qz) {
  BBox b;
  b.cx = qx + t.dx;
  b.cy = qy + t.dy;
  b.cz = qz + t.dz;
  b.l = t.l;
  b.w = t.w;
  b.h = t.h;
  b.yaw = compass_decode(t.compass);
  return b;
}

std::vector<QueryLabel> classify_queries(
    const std::vector<std::pair<double, double>>& queries,
    const std::vector<BBox>& boxes) {
  std::vector<QueryLabel> labels(queries.size(), QueryLabel::kNegative);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (const BBox& b : boxes) {
      if (point_in_bev(b, queries[i].first, queries[i].second)) {
        labels[i] = QueryLabel::kPositive;
        break;
      }
    }
  }
  return labels;
}

std::vector<double> encode_angle(double r_g, AngleEncoding enc) {
  switch (enc) {
    case AngleEncoding::kGtAngle:
      return {wrap_angle(r_g)};
    case AngleEncoding::kSinCos:
      return {std::sin(r_g), std::cos(r_g)};
    case AngleEncoding::kSecondStyle: {
      // offset within [0, pi) plus a front/back direction bit
      const double a = wrap_angle(r_g);
      const double dir = a >= 0.0 ? 1.0 : 0.0;
      const double offset = dir > 0.5 ? a : a + kPi;
      return {offset, dir};
    }
    case AngleEncoding::kCompass: {
      const CompassCode c = compass_encode(r_g);
      std::vector<double> out;
      out.insert(out.end(), c.cos_offsets.begin(), c.cos_offsets.end());
      out.insert(out.end(), c.sin_offsets.begin(), c.sin_offsets.end());
      out.insert(out.end(), c.scores.begin(), c.scores.end());
      return out;
    }
  }
  throw std::invalid_argument("encode_angle: unknown encoding");
}

double decode_angle(const std::vector<double>& code, AngleEncoding enc) {
  switch (enc) {
    case AngleEncoding::kGtAngle:
      if (code.size() != 1) throw std::invalid_argument("decode_angle: bad code width");
      return wrap_angle(code[0]);
    case AngleEncoding::kSinCos:
      if (code.size() != 2) throw std::invalid_argument("decode_angle: bad code width");
      return wrap_angle(std::atan2(code[0], code[1]));
    case AngleEncoding::kSecondStyle: {
      if (code.size() != 2) throw std::invalid_argument("decode_angle: bad code width");
      return wrap_angle(code[1] > 0.5 ? code[0] : code[0] - kPi);
    }
    case AngleEncoding::kCompass: {
      if (code.size() != 12) throw std::invalid_argument("decode_angle: bad code width");
      CompassCode c;
      std::copy_n(code.begin(), 4, c.cos_offsets.begin());
      std::copy_n(code.begin() + 4, 4, c.sin_offsets.begin());
      std::copy_n(code.begin() + 8, 4, c.scores.begin());
      return compass_decode(c);
    }
  }
  throw std::invalid_argument("decode_angle: unknown encoding");
}

}  // namespace coopdet
