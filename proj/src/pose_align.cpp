#include "coopdet/pose_align.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "coopdet/hungarian.hpp"

namespace coopdet {

namespace {

NeighborFeature neighbor_feature(const BBox& self, const BBox& nbr) {
  NeighborFeature f;
  const double dx = nbr.cx - self.cx;
  const double dy = nbr.cy - self.cy;
  f.eps_d = std::hypot(dx, dy);
  const double theta = std::atan2(dy, dx);   // edge direction
  const double alpha = self.yaw;
  const double beta = nbr.yaw;
  f.eps_a = {std::sin(theta - alpha), std::cos(theta - alpha)};
  f.nu_a = {std::sin(beta - alpha), std::cos(beta - alpha)};
  f.nu_dim = {nbr.l, nbr.w, nbr.h};
  return f;
}

}  // namespace

std::vector<BoxDescriptor> build_descriptors(const std::vector<BBox>& boxes, int k) {
  if (boxes.size() < 2)
    throw std::invalid_argument("build_descriptors: need at least 2 boxes");
  if (k < 1) throw std::invalid_argument("build_descriptors: k must be >= 1");

  const int n = static_cast<int>(boxes.size());
  std::vector<BoxDescriptor> out(boxes.size());
  for (int i = 0; i < n; ++i) {
    // neighbors by ascending center distance, ties by index
    std::vector<std::pair<double, int>> order;
    order.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      order.emplace_back(std::hypot(boxes[j].cx - boxes[i].cx, boxes[j].cy - boxes[i].cy), j);
    }
    std::sort(order.begin(), order.end());

    std::vector<std::array<double, 8>> rows;
    rows.reserve(static_cast<std::size_t>(k));
    for (int r = 0; r < k && r < static_cast<int>(order.size()); ++r) {
      rows.push_back(neighbor_feature(boxes[i], boxes[order[r].second]).flat());
    }
    while (static_cast<int>(rows.size()) < k) rows.push_back({});  // zero padding

    BoxDescriptor d;
    for (int c = 0; c < 8; ++c) {
      double sum = 0.0;
      double mx = rows.front()[c];
      for (const auto& row : rows) {
        sum += row[c];
        mx = std::max(mx, row[c]);
      }
      d.vector[c] = sum / static_cast<double>(rows.size());
      d.vector[c + 8] = mx;
    }
    out[i] = d;
  }
  return out;
}

MatchResult match_boxes(const std::vector<BoxDescriptor>& da,
                        const std::vector<BoxDescriptor>& db,
                        double reject_threshold, double distance_normalizer) {
  if (da.empty() || db.empty())
    throw std::invalid_argument("match_boxes: descriptor lists must be non-empty");

  auto scaled = [&](const BoxDescriptor& d, int c) {
    // channels 0 and 8 are the mean/max center distances, in meters
    const double v = d.vector[c];
    return (c == 0 || c == 8) ? v / distance_normalizer : v;
  };

  std::vector<std::vector<double>> cost(da.size(), std::vector<double>(db.size()));
  for (std::size_t i = 0; i < da.size(); ++i) {
    for (std::size_t j = 0; j < db.size(); ++j) {
      double s = 0.0;
      for (int c = 0; c < 16; ++c) {
        const double d = scaled(da[i], c) - scaled(db[j], c);
        s += d * d;
      }
      cost[i][j] = std::sqrt(s);
    }
  }

  const std::vector<int> assignment = solve_assignment(cost);
  MatchResult res;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int j = assignment[i];
    if (j < 0) continue;
    if (cost[i][j] > reject_threshold) {
      res.rejected.emplace_back(static_cast<int>(i), j);
    } else {
      res.pairs.emplace_back(static_cast<int>(i), j);
      res.cost.push_back(cost[i][j]);
    }
  }
  return res;
}

Pose estimate_se2(const std::vector<std::pair<BBox, BBox>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("estimate_se2: need at least 1 pair");

  auto heading_yaw = [&]() {
    // circular mean of per-pair heading differences
    double s = 0.0, c = 0.0;
    for (const auto& [a, b] : pairs) {
      const double d = a.yaw - b.yaw;
      s += std::sin(d);
      c += std::cos(d);
    }
    return std::atan2(s, c);
  };

  double ax = 0.0, ay = 0.0, bx = 0.0, by = 0.0;
  for (const auto& [a, b] : pairs) {
    ax += a.cx;
    ay += a.cy;
    bx += b.cx;
    by += b.cy;
  }
  const double n = static_cast<double>(pairs.size());
  ax /= n; ay /= n; bx /= n; by /= n;

  double yaw;
  if (pairs.size() == 1) {
    yaw = heading_yaw();
  } else {
    // 2D Kabsch on centered centers
    double num = 0.0, den = 0.0, spread = 0.0;
    for (const auto& [a, b] : pairs) {
      const double pax = a.cx - ax, pay = a.cy - ay;
      const double pbx = b.cx - bx, pby = b.cy - by;
      num += pbx * pay - pby * pax;
      den += pbx * pax + pby * pay;
      spread += pbx * pbx + pby * pby;
    }
    yaw = spread < 1e-18 ? heading_yaw() : std::atan2(num, den);
  }

  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return Pose(ax - (c * bx - s * by), ay - (s * bx + c * by), 0.0, yaw);
}

namespace {

Eigen::Vector3d edge_residual(const Pose& pi, const Pose& pj, const Pose& meas) {
  const double c = std::cos(pi.yaw);
  const double s = std::sin(pi.yaw);
  const double dx = pj.x - pi.x;
  const double dy = pj.y - pi.y;
  return {c * dx + s * dy - meas.x, -s * dx + c * dy - meas.y,
          wrap_angle(pj.yaw - pi.yaw - meas.yaw)};
}

void check_connected(std::size_t n, const std::vector<PoseGraphEdge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= static_cast<int>(n) || e.j >= static_cast<int>(n))
      throw std::invalid_argument("pose_graph_optimize: edge index out of range");
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<char> seen(n, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        queue.push_back(w);
      }
    }
  }
  if (count != n) throw std::invalid_argument("pose_graph_optimize: graph is disconnected");
}

}  // namespace

double pose_graph_residual(const std::vector<Pose>& poses,
                           const std::vector<PoseGraphEdge>& edges) {
  double total = 0.0;
  for (const auto& e : edges) {
    total += e.weight * edge_residual(poses[e.i], poses[e.j], e.measurement).squaredNorm();
  }
  return total;
}

std::vector<Pose> pose_graph_optimize(const std::vector<Pose>& poses,
                                      const std::vector<PoseGraphEdge>& edges) {
  const std::size_t n = poses.size();
  if (n == 0) return {};
  check_connected(n, edges);
  if (n == 1) return poses;

  std::vector<Pose> current = poses;
  const int dof = 3 * static_cast<int>(n - 1);  // node 0 fixed as gauge

  for (int iter = 0; iter < 50; ++iter) {
    const double r0 = pose_graph_residual(current, edges);

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dof, dof);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dof);
    for (const auto& e : edges) {
      const Pose& pi = current[e.i];
      const Pose& pj = current[e.j];
      const Eigen::Vector3d r = edge_residual(pi, pj, e.measurement);

      const double c = std::cos(pi.yaw);
      const double s = std::sin(pi.yaw);
      const double dx = pj.x - pi.x;
      const double dy = pj.y - pi.y;

      Eigen::Matrix3d Ji;  // d r / d (xi, yi, yawi)
      Ji << -c, -s, -s * dx + c * dy,
             s, -c, -c * dx - s * dy,
             0,  0, -1;
      Eigen::Matrix3d Jj;  // d r / d (xj, yj, yawj)
      Jj << c, s, 0,
           -s, c, 0,
            0, 0, 1;

      auto accumulate = [&](int node_a, const Eigen::Matrix3d& Ja, int node_b,
                            const Eigen::Matrix3d& Jb) {
        if (node_a > 0) {
          const int ia = 3 * (node_a - 1);
          H.block<3, 3>(ia, ia) += e.weight * Ja.transpose() * Ja;
          g.segment<3>(ia) += e.weight * Ja.transpose() * r;
          if (node_b > 0) {
            const int ib = 3 * (node_b - 1);
            H.block<3, 3>(ia, ib) += e.weight * Ja.transpose() * Jb;
          }
        }
      };
      accumulate(e.i, Ji, e.j, Jj);
      accumulate(e.j, Jj, e.i, Ji);
    }

    // damped solve; accept only residual-non-increasing steps
    double lambda = 0.0;
    bool accepted = false;
    bool solved_any = false;
    Eigen::VectorXd step;
    for (int attempt = 0; attempt <= 5; ++attempt) {
      Eigen::MatrixXd Hd = H;
      if (lambda > 0.0) Hd.diagonal().array() += lambda;
      const Eigen::VectorXd delta = Hd.ldlt().solve(-g);
      if (delta.allFinite() && (Hd * delta + g).norm() <= 1e-6 * std::max(1.0, g.norm())) {
        solved_any = true;
        std::vector<Pose> candidate = current;
        for (std::size_t k = 1; k < n; ++k) {
          const int idx = 3 * static_cast<int>(k - 1);
          candidate[k].x += delta[idx];
          candidate[k].y += delta[idx + 1];
          candidate[k].yaw = wrap_angle(candidate[k].yaw + delta[idx + 2]);
        }
        if (pose_graph_residual(candidate, edges) <= r0 + 1e-15) {
          current = std::move(candidate);
          step = delta;
          accepted = true;
          break;
        }
      }
      lambda = lambda == 0.0 ? 1e-6 : lambda * 10.0;
    }

    if (!accepted) {
      if (!solved_any)
        throw std::runtime_error("pose_graph_optimize: singular normal equations");
      break;  // no improving step left
    }
    if (step.norm() < 1e-9) break;
  }
  return current;
}

AlignResult align_agent(const std::vector<BBox>& ego_boxes,
                        const std::vector<BBox>& coop_boxes, const Pose& prior,
                        const AlignConfig& cfg) {
  if (ego_boxes.empty() || coop_boxes.empty())
    throw std::invalid_argument("align_agent: box sets must be non-empty");

  AlignResult res;
  res.corrected = prior;
  if (ego_boxes.size() < 2 || coop_boxes.size() < 2) {
    res.low_confidence = true;
    return res;
  }

  const auto da = build_descriptors(ego_boxes, cfg.k_neighbors);
  const auto db = build_descriptors(coop_boxes, cfg.k_neighbors);
  res.match = match_boxes(da, db, cfg.reject_threshold, cfg.distance_normalizer);

  if (res.match.pairs.size() < 2) {
    res.low_confidence = true;
    return res;
  }

  std::vector<std::pair<BBox, BBox>> pairs;
  pairs.reserve(res.match.pairs.size());
  for (const auto& [i, j] : res.match.pairs) pairs.emplace_back(ego_boxes[i], coop_boxes[j]);
  res.corrected = estimate_se2(pairs);
  return res;
}

}  // namespace coopdet
