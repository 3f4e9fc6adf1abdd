#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopdet/geometry.hpp"
#include "coopdet/temporal_align.hpp"

namespace coopdet {

/// Broadcast perception message: sender pose + timestamp + object queries +
/// detected boxes. Immutable value once built.
struct Cpm {
  uint32_t agent_id = 0;
  Pose pose;
  double t = 0.0;
  std::vector<Query> queries;
  std::vector<BBox> boxes;
};

struct CpmDecodeError : std::runtime_error {
  CpmDecodeError(const std::string& what, std::size_t offset_);
  std::size_t offset;
};

/// Keep only items with score strictly greater than the threshold.
std::pair<std::vector<Query>, std::vector<BBox>> select_by_score(
    const std::vector<Query>& queries, const std::vector<BBox>& boxes,
    double threshold);

/// Wire layout (little-endian):
///   header, 28 bytes: magic "CPM1", version u16, agent_id u32, flags u16,
///     t f64, n_queries u16, n_boxes u16, feature_width u32
///   pose block, 56 bytes: x, y, z, yaw + 3 reserved, all f64
///   per query: feature_width * f32, x f32, y f32, score f32, t f32
///   per box:   cx, cy, cz, l, w, h, yaw, score, t as f32 + 4 pad bytes
std::vector<uint8_t> encode_cpm(const Cpm& c);
Cpm decode_cpm(const std::vector<uint8_t>& bytes);

/// Closed-form serialized size in bytes, without encoding.
std::size_t cpm_size(const Cpm& c);
std::size_t cpm_size(std::size_t n_queries, std::size_t n_boxes, std::size_t feature_width);

constexpr uint16_t kCpmVersion = 1;
constexpr std::size_t kCpmHeaderBytes = 28;
constexpr std::size_t kCpmPoseBytes = 56;
constexpr std::size_t kCpmBoxBytes = 40;

}  // namespace coopdet
