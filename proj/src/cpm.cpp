#include "coopdet/cpm.hpp"

#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace coopdet {

CpmDecodeError::CpmDecodeError(const std::string& what, std::size_t offset_)
    : std::runtime_error(what + " (at byte offset " + std::to_string(offset_) + ")"),
      offset(offset_) {}

std::pair<std::vector<Query>, std::vector<BBox>> select_by_score(
    const std::vector<Query>& queries, const std::vector<BBox>& boxes,
    double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw std::invalid_argument("select_by_score: threshold must be in [0, 1]");
  std::vector<Query> q;
  std::vector<BBox> b;
  for (const Query& x : queries) {
    if (x.score > threshold) q.push_back(x);
  }
  for (const BBox& x : boxes) {
    if (x.score > threshold) b.push_back(x);
  }
  return {std::move(q), std::move(b)};
}

std::size_t cpm_size(std::size_t n_queries, std::size_t n_boxes,
                     std::size_t feature_width) {
  return kCpmHeaderBytes + kCpmPoseBytes + n_queries * (feature_width * 4 + 16) +
         n_boxes * kCpmBoxBytes;
}

std::size_t cpm_size(const Cpm& c) {
  const std::size_t width = c.queries.empty() ? 0 : c.queries.front().feature.size();
  return cpm_size(c.queries.size(), c.boxes.size(), width);
}

namespace {

class Writer {
 public:
  explicit Writer(std::vector<uint8_t>& out) : out_(out) {}

  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void bytes(const void* p, std::size_t n) { raw(p, n); }

 private:
  void raw(const void* p, std::size_t n) {
    // assumes a little-endian host
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<uint8_t>& in) : in_(in) {}

  std::size_t offset() const { return pos_; }

  uint16_t u16() { return get<uint16_t>(); }
  uint32_t u32() { return get<uint32_t>(); }
  float f32() { return get<float>(); }
  double f64() { return get<double>(); }

  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }

  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  template <typename T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void need(std::size_t n) {
    if (pos_ + n > in_.size()) throw CpmDecodeError("truncated CPM", pos_);
  }
  const std::vector<uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<uint8_t> encode_cpm(const Cpm& c) {
  const std::size_t width = c.queries.empty() ? 0 : c.queries.front().feature.size();
  for (const Query& q : c.queries) {
    if (q.feature.size() != width)
      throw std::invalid_argument("encode_cpm: non-uniform feature widths");
  }
  if (c.queries.size() > std::numeric_limits<uint16_t>::max() ||
      c.boxes.size() > std::numeric_limits<uint16_t>::max())
    throw std::invalid_argument("encode_cpm: too many records for the wire format");

  std::vector<uint8_t> out;
  out.reserve(cpm_size(c));
  Writer w(out);

  w.bytes("CPM1", 4);
  w.u16(kCpmVersion);
  w.u32(c.agent_id);
  w.u16(0);  // flags
  w.f64(c.t);
  w.u16(static_cast<uint16_t>(c.queries.size()));
  w.u16(static_cast<uint16_t>(c.boxes.size()));
  w.u32(static_cast<uint32_t>(width));

  w.f64(c.pose.x);
  w.f64(c.pose.y);
  w.f64(c.pose.z);
  w.f64(c.pose.yaw);
  w.f64(0.0);
  w.f64(0.0);
  w.f64(0.0);  // reserved

  for (const Query& q : c.queries) {
    for (float f : q.feature) w.f32(f);
    w.f32(static_cast<float>(q.x));
    w.f32(static_cast<float>(q.y));
    w.f32(static_cast<float>(q.score));
    w.f32(static_cast<float>(q.t));
  }
  for (const BBox& b : c.boxes) {
    w.f32(static_cast<float>(b.cx));
    w.f32(static_cast<float>(b.cy));
    w.f32(static_cast<float>(b.cz));
    w.f32(static_cast<float>(b.l));
    w.f32(static_cast<float>(b.w));
    w.f32(static_cast<float>(b.h));
    w.f32(static_cast<float>(b.yaw));
    w.f32(static_cast<float>(b.score));
    w.f32(static_cast<float>(b.t));
    w.u32(0);  // pad
  }
  return out;
}

Cpm decode_cpm(const std::vector<uint8_t>& bytes) {
  Reader r(bytes);

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "CPM1", 4) != 0) throw CpmDecodeError("bad magic", 0);
  const uint16_t version = r.u16();
  if (version != kCpmVersion)
    throw CpmDecodeError("unsupported version " + std::to_string(version), 4);

  Cpm c;
  c.agent_id = r.u32();
  r.u16();  // flags
  c.t = r.f64();
  const uint16_t n_queries = r.u16();
  const uint16_t n_boxes = r.u16();
  const uint32_t width = r.u32();

  c.pose.x = r.f64();
  c.pose.y = r.f64();
  c.pose.z = r.f64();
  c.pose.yaw = r.f64();
  r.skip(24);  // reserved

  c.queries.resize(n_queries);
  for (Query& q : c.queries) {
    q.feature.resize(width);
    for (float& f : q.feature) f = r.f32();
    q.x = r.f32();
    q.y = r.f32();
    q.score = r.f32();
    q.t = r.f32();
  }
  c.boxes.resize(n_boxes);
  for (BBox& b : c.boxes) {
    b.cx = r.f32();
    b.cy = r.f32();
    b.cz = r.f32();
    b.l = r.f32();
    b.w = r.f32();
    b.h = r.f32();
    b.yaw = r.f32();
    b.score = r.f32();
    b.t = r.f32();
    r.skip(4);
  }
  if (r.offset() != bytes.size())
    throw CpmDecodeError("trailing bytes after CPM payload", r.offset());
  return c;
}

}  // namespace coopdet
