#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "coopdet/geometry.hpp"

namespace coopdet {

/// Relative geometry between one box and one neighbor. All channels except
/// the raw neighbor dimensions are invariant under a common rigid transform.
struct NeighborFeature {
  double eps_d = 0.0;                      // center distance
  std::array<double, 2> eps_a{0.0, 1.0};   // [sin, cos] of edge direction - own yaw
  std::array<double, 2> nu_a{0.0, 1.0};    // [sin, cos] of neighbor yaw - own yaw
  std::array<double, 3> nu_dim{0.0, 0.0, 0.0};  // neighbor l, w, h

  std::array<double, 8> flat() const {
    return {eps_d, eps_a[0], eps_a[1], nu_a[0], nu_a[1], nu_dim[0], nu_dim[1], nu_dim[2]};
  }
};

/// Pose-agnostic neighborhood signature of one box: componentwise [mean; max]
/// over its k nearest neighbor feature rows (rows ordered by distance).
struct BoxDescriptor {
  std::array<double, 16> vector{};
};

struct MatchResult {
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::pair<int, int>> rejected;
  std::vector<double> cost;  // one entry per accepted pair

  bool operator==(const MatchResult& o) const {
    return pairs == o.pairs && rejected == o.rejected;
  }
};

struct AlignConfig {
  int k_neighbors = 8;
  double distance_normalizer = 50.0;  // meters; scales eps_d channels in the cost
  double reject_threshold = 0.3;      // in normalized descriptor space
};

std::vector<BoxDescriptor> build_descriptors(const std::vector<BBox>& boxes, int k = 8);

MatchResult match_boxes(const std::vector<BoxDescriptor>& da,
                        const std::vector<BoxDescriptor>& db,
                        double reject_threshold,
                        double distance_normalizer = 50.0);

/// Rigid SE(2) fit mapping second-element box centers onto first-element ones.
/// Two or more pairs: 2D Kabsch; one pair (or degenerate spread): yaw from the
/// mean heading difference, translation from centers.
Pose estimate_se2(const std::vector<std::pair<BBox, BBox>>& pairs);

struct PoseGraphEdge {
  int i = 0;
  int j = 0;
  Pose measurement;  // expected value of inverse(T_i) * T_j
  double weight = 1.0;
};

/// Gauss-Newton on (x, y, yaw) with node 0 held fixed. Damped retries on
/// singular or non-improving steps. Throws on disconnected graphs.
std::vector<Pose> pose_graph_optimize(const std::vector<Pose>& poses,
                                      const std::vector<PoseGraphEdge>& edges);

double pose_graph_residual(const std::vector<Pose>& poses,
                           const std::vector<PoseGraphEdge>& edges);

struct AlignResult {
  Pose corrected;  // cooperative-to-ego transform
  bool low_confidence = false;
  MatchResult match;
};

/// Full alignment pipeline: descriptors -> match -> reject -> SE(2) fit.
/// Falls back to the prior (low-confidence) with fewer than 2 surviving pairs.
AlignResult align_agent(const std::vector<BBox>& ego_boxes,
                        const std::vector<BBox>& coop_boxes,
                        const Pose& prior, const AlignConfig& cfg = {});

}  // namespace coopdet
