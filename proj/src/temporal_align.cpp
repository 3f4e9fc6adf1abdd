#include "coopdet/temporal_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coopdet {

void MemoryQueue::push(std::vector<Query> queries, double t) {
  if (!frames_.empty() && t <= frames_.back().t)
    throw std::invalid_argument("MemoryQueue::push: timestamps must be strictly increasing");

  if (static_cast<int>(queries.size()) > top_k_) {
    std::vector<std::size_t> order(queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (queries[a].score != queries[b].score) return queries[a].score > queries[b].score;
      const int64_t ta = queries[a].track_id.value_or(std::numeric_limits<int64_t>::max());
      const int64_t tb = queries[b].track_id.value_or(std::numeric_limits<int64_t>::max());
      if (ta != tb) return ta < tb;
      return a < b;
    });
    order.resize(static_cast<std::size_t>(top_k_));
    std::sort(order.begin(), order.end());  // keep original relative order
    std::vector<Query> kept;
    kept.reserve(order.size());
    for (std::size_t i : order) kept.push_back(std::move(queries[i]));
    queries = std::move(kept);
  }

  frames_.push_back({std::move(queries), t});
  while (static_cast<int>(frames_.size()) > max_frames_) frames_.pop_front();
}

namespace {

struct Sample {
  double t, x, y;
};

// history samples matched to one current query, oldest first
std::vector<Sample> gather_history(const MemoryQueue& mq, const Query& q,
                                   const PredictConfig& cfg) {
  std::vector<Sample> samples;
  for (const MemoryFrame& frame : mq.frames()) {
    const Query* best = nullptr;
    if (q.track_id) {
      for (const Query& h : frame.queries) {
        if (h.track_id && *h.track_id == *q.track_id) {
          best = &h;
          break;
        }
      }
    } else {
      double best_d = cfg.gating_radius;
      for (const Query& h : frame.queries) {
        const double d = std::hypot(h.x - q.x, h.y - q.y);
        if (d < best_d) {
          best_d = d;
          best = &h;
        }
      }
    }
    if (best) samples.push_back({frame.t, best->x, best->y});
  }
  return samples;
}

// least-squares slope of a linear fit through (t, v) samples
std::pair<double, double> fit_velocity(const std::vector<Sample>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) return {0.0, 0.0};
  double mt = 0.0, mx = 0.0, my = 0.0;
  for (const Sample& s : samples) {
    mt += s.t;
    mx += s.x;
    my += s.y;
  }
  mt /= n; mx /= n; my /= n;
  double stt = 0.0, stx = 0.0, sty = 0.0;
  for (const Sample& s : samples) {
    const double dt = s.t - mt;
    stt += dt * dt;
    stx += dt * (s.x - mx);
    sty += dt * (s.y - my);
  }
  if (stt < 1e-18) return {0.0, 0.0};
  return {stx / stt, sty / stt};
}

}  // namespace

std::vector<std::pair<double, double>> estimate_velocities(
    const MemoryQueue& mq, const std::vector<Query>& current,
    const PredictConfig& cfg) {
  std::vector<std::pair<double, double>> out;
  out.reserve(current.size());
  for (const Query& q : current) {
    std::vector<Sample> samples = gather_history(mq, q, cfg);
    samples.push_back({q.t, q.x, q.y});
    out.push_back(fit_velocity(samples));
  }
  return out;
}

std::vector<Query> predict_at_time(const MemoryQueue& mq,
                                   const std::vector<Query>& current,
                                   double t_target, const PredictConfig& cfg) {
  if (!mq.empty() && t_target < mq.newest_t() - 1e-12)
    throw std::invalid_argument("predict_at_time: t_target precedes newest memory frame");

  const auto velocities = estimate_velocities(mq, current, cfg);
  std::vector<Query> out = current;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double dt = t_target - out[i].t;
    out[i].x += velocities[i].first * dt;
    out[i].y += velocities[i].second * dt;
    out[i].t = t_target;
  }
  return out;
}

std::pair<std::vector<Query>, std::vector<BBox>> compensate_latency(
    const std::vector<Query>& queries, const std::vector<BBox>& boxes,
    double t_send, double t_now, const MemoryQueue& mq, const PredictConfig& cfg) {
  if (t_now < t_send)
    throw std::invalid_argument("compensate_latency: t_now must be >= t_send");

  const auto velocities = estimate_velocities(mq, queries, cfg);
  std::vector<Query> out_q = queries;
  for (std::size_t i = 0; i < out_q.size(); ++i) {
    const double dt = t_now - out_q[i].t;
    out_q[i].x += velocities[i].first * dt;
    out_q[i].y += velocities[i].second * dt;
    out_q[i].t = t_now;
  }

  // each box rides along with its nearest source query
  std::vector<BBox> out_b = boxes;
  for (BBox& b : out_b) {
    double best_d = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const double d = std::hypot(queries[i].x - b.cx, queries[i].y - b.cy);
      if (d < best_d) {
        best_d = d;
        best_i = i;
      }
    }
    const double dt = t_now - b.t;
    if (!queries.empty()) {
      b.cx += velocities[best_i].first * dt;
      b.cy += velocities[best_i].second * dt;
    }
    b.t = t_now;
  }
  return {std::move(out_q), std::move(out_b)};
}

}  // namespace coopdet
