#pragma once

#include <array>
#include <functional>
#include <vector>

#include "coopdet/geometry.hpp"
#include "coopdet/temporal_align.hpp"

namespace coopdet {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 yaw_rotation_matrix(double yaw);

/// Adapts a feature vector to the ego frame given the rotation applied to the
/// query positions. Replaceable with a learned map.
using RotationAdapter =
    std::function<std::vector<float>(const std::vector<float>&, const Mat3&)>;

/// Default: keep the feature, write flatten(R) row-major into its last 9 slots.
RotationAdapter default_rotation_adapter();

/// Validates orthonormality of R (tolerance 1e-6) and applies the adapter.
std::vector<float> adapt_rotation(const std::vector<float>& features, const Mat3& R,
                                  const RotationAdapter& adapter = default_rotation_adapter());

/// Transform cooperative query positions into the ego frame, then round each
/// axis half-up to the nearest grid node. Duplicates are kept.
std::vector<Query> snap_to_grid(const std::vector<Query>& coop_queries,
                                const Pose& T_c_e, double grid_res);

/// Per-neighbor feature map conditioned on the relative offset.
using NeighborTransform = std::function<std::vector<float>(
    const std::vector<float>&, double dx, double dy, double grid_res)>;

struct FuseConfig {
  int k = 8;
  double grid_res = 0.8;
  bool normalize = true;  // divide (max + mean) by 2 so empty-coop is identity
  NeighborTransform neighbor_transform;  // default: inverse-distance scaling
  bool self_only = false;  // rotation-only comparison mode (k = 1, own node)
};

/// k-NN fusion over the union of ego and (snapped) cooperative queries.
/// Output nodes are the deduplicated union of positions; fused feature is the
/// elementwise max plus mean over the k nearest neighbor features, fused score
/// is the max neighbor score and fused time the score-weighted mean.
/// With no cooperative queries the ego input is returned unchanged.
std::vector<Query> knn_fuse(const std::vector<Query>& ego_q,
                            const std::vector<Query>& coop_q,
                            const FuseConfig& cfg = {});

}  // namespace coopdet
