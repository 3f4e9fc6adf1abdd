#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "coopdet/geometry.hpp"

namespace coopdet {

/// Shared unit of perception: a feature vector anchored at a BEV position.
struct Query {
  std::vector<float> feature;
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;  // in [0, 1]
  double t = 0.0;
  std::optional<int64_t> track_id;
};

struct MemoryFrame {
  std::vector<Query> queries;
  double t = 0.0;
};

/// Ring buffer of the top-scoring queries from recent frames.
class MemoryQueue {
 public:
  explicit MemoryQueue(int max_frames = 4, int top_k = 256)
      : max_frames_(max_frames), top_k_(top_k) {}

  int max_frames() const { return max_frames_; }
  int top_k() const { return top_k_; }
  const std::deque<MemoryFrame>& frames() const { return frames_; }
  bool empty() const { return frames_.empty(); }
  double newest_t() const { return frames_.back().t; }

  /// Keep the top_k queries by score (ties: lower track id, then input order),
  /// drop the oldest frame past capacity. Timestamps must be monotone.
  void push(std::vector<Query> queries, double t);

 private:
  int max_frames_;
  int top_k_;
  std::deque<MemoryFrame> frames_;
};

struct PredictConfig {
  double gating_radius = 3.0;  // meters, for trackless history association
};

/// Constant-velocity extrapolation of each query to t_target. Velocity comes
/// from a least-squares linear fit over its matched history (track id first,
/// else per-frame nearest neighbor within the gating radius). Queries without
/// history keep their position. All output timestamps equal t_target.
std::vector<Query> predict_at_time(const MemoryQueue& mq,
                                   const std::vector<Query>& current,
                                   double t_target, const PredictConfig& cfg = {});

/// Per-query velocities from the same history fit (m/s); zero without history.
std::vector<std::pair<double, double>> estimate_velocities(
    const MemoryQueue& mq, const std::vector<Query>& current,
    const PredictConfig& cfg = {});

/// Advance late queries and boxes from t_send to t_now; each box moves with
/// the velocity of its nearest query.
std::pair<std::vector<Query>, std::vector<BBox>> compensate_latency(
    const std::vector<Query>& queries, const std::vector<BBox>& boxes,
    double t_send, double t_now, const MemoryQueue& mq,
    const PredictConfig& cfg = {});

}  // namespace coopdet
