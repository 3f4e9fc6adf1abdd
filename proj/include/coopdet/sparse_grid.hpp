#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "coopdet/geometry.hpp"

namespace coopdet {

using Coord = std::array<int32_t, 3>;  // z unused when dims == 2

struct CoordHash {
  std::size_t operator()(const Coord& c) const {
    std::size_t h = 1469598103934665603ull;
    for (int32_t v : c) {
      h ^= static_cast<std::size_t>(static_cast<uint32_t>(v));
      h *= 1099511628211ull;
    }
    return h;
  }
};

/// Stride-tagged sparse voxel grid. Coordinates are kept in stride-1 units and
/// are always multiples of `stride`. One feature vector per coordinate.
class SparseGrid {
 public:
  SparseGrid() = default;
  SparseGrid(int dims, int stride, double voxel_size)
      : dims_(dims), stride_(stride), voxel_size_(voxel_size) {}

  int dims() const { return dims_; }
  int stride() const { return stride_; }
  double voxel_size() const { return voxel_size_; }
  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }

  const std::vector<Coord>& coords() const { return coords_; }
  const std::vector<std::vector<double>>& features() const { return features_; }

  bool contains(const Coord& c) const { return index_.count(c) != 0; }
  const std::vector<double>* feature_at(const Coord& c) const;

  /// Insert a coordinate; returns false (keeping the old feature) if present.
  bool insert(const Coord& c, std::vector<double> feature);

 private:
  int dims_ = 2;
  int stride_ = 1;
  double voxel_size_ = 0.4;
  std::vector<Coord> coords_;
  std::vector<std::vector<double>> features_;
  std::unordered_map<Coord, std::size_t, CoordHash> index_;
};

struct ConnectivityReport {
  int component_count = 0;
  std::vector<int> component_sizes;
  // Chebyshev distance (stride-1 units) between the closest pair of distinct
  // components; 0 when there is at most one component.
  int largest_gap = 0;
};

/// Stride-1 discretization of a point cloud.
/// Feature layout: [count, mean dx, mean dy, mean dz, min t, max t, free frac].
SparseGrid voxelize(const TimedPointCloud& pc, double voxel_size, int dims);

/// Non-expanding sparse-convolution coordinate rule: output coordinates are the
/// (possibly downsampled) input coordinates; features averaged over the kernel
/// neighborhood restricted to active inputs.
SparseGrid conv_coords_standard(const SparseGrid& g, int kernel, int stride_out);

/// Coordinate-expanding convolution: output coordinate set is the Minkowski
/// dilation of the input set by the full kernel footprint (Chebyshev radius
/// (kernel-1)/2 in stride units). New coordinates receive the mean feature of
/// their active neighbors; existing coordinates keep theirs.
SparseGrid cec_expand(const SparseGrid& g, int kernel);

/// Transposed-side contraction: output coordinates are exactly the reference
/// coordinates; features come from g where present, zero vectors otherwise.
SparseGrid cec_contract(const SparseGrid& g, const SparseGrid& reference);

/// Connected components under Chebyshev-1 adjacency at the grid's stride.
ConnectivityReport connectivity(const SparseGrid& g);

/// Fraction of boxes whose BEV center cell is an active coordinate.
/// Empty box list returns 1.0.
double center_coverage(const SparseGrid& g, const std::vector<BBox>& boxes);

/// Line-oriented text dump: `stride c0 c1 [c2] | f0 f1 ...` per coordinate,
/// sorted lexicographically for stable golden files.
std::string dump_grid(const SparseGrid& g);

}  // namespace coopdet
