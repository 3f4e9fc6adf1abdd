#include "coopdet/spatial_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace coopdet {

Mat3 yaw_rotation_matrix(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
}

RotationAdapter default_rotation_adapter() {
  return [](const std::vector<float>& f, const Mat3& R) {
    std::vector<float> out = f;
    if (out.size() < 9)
      throw std::invalid_argument("rotation adapter: feature needs a 9-slot suffix");
    std::size_t k = out.size() - 9;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out[k++] = static_cast<float>(R[r][c]);
    }
    return out;
  };
}

std::vector<float> adapt_rotation(const std::vector<float>& features, const Mat3& R,
                                  const RotationAdapter& adapter) {
  // orthonormality: ||R^T R - I||_F < 1e-6
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += R[k][i] * R[k][j];
      const double d = dot - (i == j ? 1.0 : 0.0);
      err += d * d;
    }
  }
  if (std::sqrt(err) >= 1e-6)
    throw std::invalid_argument("adapt_rotation: R is not orthonormal");
  return adapter(features, R);
}

std::vector<Query> snap_to_grid(const std::vector<Query>& coop_queries,
                                const Pose& T_c_e, double grid_res) {
  if (grid_res <= 0.0) throw std::invalid_argument("snap_to_grid: grid_res must be > 0");
  auto snap = [grid_res](double v) {
    return std::floor(v / grid_res + 0.5) * grid_res;  // round half up
  };
  std::vector<Query> out = coop_queries;
  for (Query& q : out) {
    double x = q.x, y = q.y, z = 0.0;
    apply_pose(T_c_e, x, y, z);
    q.x = snap(x);
    q.y = snap(y);
  }
  return out;
}

namespace {

std::vector<float> default_neighbor_transform(const std::vector<float>& f, double dx,
                                              double dy, double grid_res) {
  const double scale = 1.0 / (1.0 + std::hypot(dx, dy) / grid_res);
  std::vector<float> out = f;
  for (float& v : out) v = static_cast<float>(v * scale);
  return out;
}

}  // namespace

std::vector<Query> knn_fuse(const std::vector<Query>& ego_q,
                            const std::vector<Query>& coop_q, const FuseConfig& cfg) {
  if (ego_q.empty() && coop_q.empty())
    throw std::invalid_argument("knn_fuse: query union must be non-empty");
  if (coop_q.empty()) return ego_q;  // single-agent identity contract

  const NeighborTransform& transform =
      cfg.neighbor_transform ? cfg.neighbor_transform
                             : NeighborTransform(default_neighbor_transform);

  std::vector<Query> pool = ego_q;
  pool.insert(pool.end(), coop_q.begin(), coop_q.end());

  // output nodes: union of positions, coincident nodes keep the best-scoring
  // representative
  std::map<std::pair<double, double>, std::size_t> node_index;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto key = std::make_pair(pool[i].x, pool[i].y);
    auto [it, fresh] = node_index.emplace(key, i);
    if (!fresh && pool[i].score > pool[it->second].score) it->second = i;
  }
  std::vector<std::size_t> nodes;
  nodes.reserve(node_index.size());
  for (const auto& [key, idx] : node_index) nodes.push_back(idx);

  std::vector<Query> out;
  out.reserve(nodes.size());
  for (std::size_t node : nodes) {
    const Query& center = pool[node];

    std::vector<std::pair<double, std::size_t>> order;
    if (cfg.self_only) {
      order.emplace_back(0.0, node);
    } else {
      order.reserve(pool.size());
      for (std::size_t j = 0; j < pool.size(); ++j) {
        order.emplace_back(std::hypot(pool[j].x - center.x, pool[j].y - center.y), j);
      }
      std::sort(order.begin(), order.end());
      if (static_cast<int>(order.size()) > cfg.k) order.resize(static_cast<std::size_t>(cfg.k));
    }

    const std::size_t width = center.feature.size();
    std::vector<double> mx(width, -std::numeric_limits<double>::infinity());
    std::vector<double> mean(width, 0.0);
    double best_score = 0.0;
    double t_num = 0.0, t_den = 0.0;
    for (const auto& [dist, j] : order) {
      const Query& nbr = pool[j];
      const std::vector<float> fij = transform(nbr.feature, center.x - nbr.x,
                                               center.y - nbr.y, cfg.grid_res);
      for (std::size_t c = 0; c < width && c < fij.size(); ++c) {
        mx[c] = std::max(mx[c], static_cast<double>(fij[c]));
        mean[c] += fij[c];
      }
      best_score = std::max(best_score, nbr.score);
      t_num += nbr.score * nbr.t;
      t_den += nbr.score;
    }

    Query fused;
    fused.x = center.x;
    fused.y = center.y;
    fused.score = best_score;
    fused.t = t_den > 0.0 ? t_num / t_den : center.t;
    fused.track_id = center.track_id;
    fused.feature.resize(width);
    const double n = static_cast<double>(order.size());
    for (std::size_t c = 0; c < width; ++c) {
      double v = mx[c] + mean[c] / n;
      if (cfg.normalize) v *= 0.5;
      fused.feature[c] = static_cast<float>(v);
    }
    out.push_back(std::move(fused));
  }
  return out;
}

}  // namespace coopdet
