#include "coopdet/sparse_grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace coopdet {

const std::vector<double>* SparseGrid::feature_at(const Coord& c) const {
  auto it = index_.find(c);
  if (it == index_.end()) return nullptr;
  return &features_[it->second];
}

bool SparseGrid::insert(const Coord& c, std::vector<double> feature) {
  auto [it, fresh] = index_.emplace(c, coords_.size());
  if (!fresh) return false;
  coords_.push_back(c);
  features_.push_back(std::move(feature));
  return true;
}

namespace {

int32_t floor_div(int32_t a, int32_t b) {
  int32_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::vector<double> mean_of(const std::vector<const std::vector<double>*>& rows) {
  if (rows.empty()) return {};
  std::vector<double> out(rows.front()->size(), 0.0);
  for (const auto* r : rows) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*r)[i];
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

}  // namespace

SparseGrid voxelize(const TimedPointCloud& pc, double voxel_size, int dims) {
  if (voxel_size <= 0.0) throw std::invalid_argument("voxelize: voxel_size must be > 0");
  if (dims != 2 && dims != 3) throw std::invalid_argument("voxelize: dims must be 2 or 3");

  struct Acc {
    int count = 0;
    double sx = 0, sy = 0, sz = 0;
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = -std::numeric_limits<double>::infinity();
    int free_count = 0;
  };
  std::unordered_map<Coord, Acc, CoordHash> cells;
  for (const TimedPoint& p : pc.points) {
    Coord c = {static_cast<int32_t>(std::floor(p.x / voxel_size)),
               static_cast<int32_t>(std::floor(p.y / voxel_size)),
               dims == 3 ? static_cast<int32_t>(std::floor(p.z / voxel_size)) : 0};
    Acc& a = cells[c];
    a.count += 1;
    a.sx += p.x - c[0] * voxel_size;
    a.sy += p.y - c[1] * voxel_size;
    a.sz += dims == 3 ? p.z - c[2] * voxel_size : p.z;
    a.tmin = std::min(a.tmin, p.t);
    a.tmax = std::max(a.tmax, p.t);
    if (p.free_space) a.free_count += 1;
  }

  SparseGrid g(dims, 1, voxel_size);
  std::vector<std::pair<Coord, Acc>> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [c, a] : sorted) {
    const double n = static_cast<double>(a.count);
    g.insert(c, {n, a.sx / n, a.sy / n, a.sz / n, a.tmin, a.tmax,
                 static_cast<double>(a.free_count) / n});
  }
  return g;
}

SparseGrid conv_coords_standard(const SparseGrid& g, int kernel, int stride_out) {
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("conv_coords_standard: kernel must be odd >= 1");
  if (stride_out < g.stride() || stride_out % g.stride() != 0)
    throw std::invalid_argument("conv_coords_standard: stride_out must be a multiple of stride");

  const int radius = (kernel - 1) / 2;
  const int zr = g.dims() == 3 ? radius : 0;

  if (stride_out == g.stride()) {
    SparseGrid out(g.dims(), g.stride(), g.voxel_size());
    const int s = g.stride();
    for (const Coord& c : g.coords()) {
      std::vector<const std::vector<double>*> rows;
      for (int dx = -radius; dx <= radius; ++dx) {
        for (int dy = -radius; dy <= radius; ++dy) {
          for (int dz = -zr; dz <= zr; ++dz) {
            Coord n = {c[0] + dx * s, c[1] + dy * s, c[2] + dz * s};
            if (const auto* f = g.feature_at(n)) rows.push_back(f);
          }
        }
      }
      out.insert(c, mean_of(rows));
    }
    return out;
  }

  // downsampling: pool inputs into stride_out cells
  SparseGrid out(g.dims(), stride_out, g.voxel_size());
  std::unordered_map<Coord, std::vector<const std::vector<double>*>, CoordHash> pools;
  std::vector<Coord> order;
  const auto& feats = g.features();
  for (std::size_t i = 0; i < g.coords().size(); ++i) {
    const Coord& c = g.coords()[i];
    Coord d = {floor_div(c[0], stride_out) * stride_out,
               floor_div(c[1], stride_out) * stride_out,
               g.dims() == 3 ? floor_div(c[2], stride_out) * stride_out : 0};
    auto [it, fresh] = pools.emplace(d, std::vector<const std::vector<double>*>{});
    if (fresh) order.push_back(d);
    it->second.push_back(&feats[i]);
  }
  for (const Coord& d : order) out.insert(d, mean_of(pools[d]));
  return out;
}

SparseGrid cec_expand(const SparseGrid& g, int kernel) {
  if (kernel < 3 || kernel % 2 == 0)
    throw std::invalid_argument("cec_expand: kernel must be odd >= 3");
  const int radius = (kernel - 1) / 2;
  const int zr = g.dims() == 3 ? radius : 0;
  const int s = g.stride();

  SparseGrid out(g.dims(), s, g.voxel_size());
  // originals keep their features
  const auto& feats = g.features();
  for (std::size_t i = 0; i < g.coords().size(); ++i) out.insert(g.coords()[i], feats[i]);

  // dilation by the kernel footprint; new cells average their active neighbors
  std::unordered_map<Coord, bool, CoordHash> seen;
  std::vector<Coord> fresh;
  for (const Coord& c : g.coords()) {
    for (int dx = -radius; dx <= radius; ++dx) {
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dz = -zr; dz <= zr; ++dz) {
          Coord n = {c[0] + dx * s, c[1] + dy * s, c[2] + dz * s};
          if (g.contains(n)) continue;
          if (seen.emplace(n, true).second) fresh.push_back(n);
        }
      }
    }
  }
  std::sort(fresh.begin(), fresh.end());
  for (const Coord& n : fresh) {
    std::vector<const std::vector<double>*> rows;
    for (int dx = -radius; dx <= radius; ++dx) {
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dz = -zr; dz <= zr; ++dz) {
          Coord a = {n[0] + dx * s, n[1] + dy * s, n[2] + dz * s};
          if (const auto* f = g.feature_at(a)) rows.push_back(f);
        }
      }
    }
    out.insert(n, mean_of(rows));
  }
  return out;
}

SparseGrid cec_contract(const SparseGrid& g, const SparseGrid& reference) {
  if (g.stride() != reference.stride())
    throw std::invalid_argument("cec_contract: stride mismatch");
  std::size_t width = 0;
  if (!g.features().empty()) width = g.features().front().size();

  SparseGrid out(reference.dims(), reference.stride(), reference.voxel_size());
  for (const Coord& c : reference.coords()) {
    if (const auto* f = g.feature_at(c)) {
      out.insert(c, *f);
    } else {
      out.insert(c, std::vector<double>(width, 0.0));
    }
  }
  return out;
}

ConnectivityReport connectivity(const SparseGrid& g) {
  ConnectivityReport rep;
  if (g.empty()) return rep;
  const int s = g.stride();
  const int zr = g.dims() == 3 ? 1 : 0;

  std::unordered_map<Coord, int, CoordHash> label;
  for (const Coord& c : g.coords()) label[c] = -1;

  std::vector<std::vector<Coord>> comps;
  for (const Coord& seed : g.coords()) {
    if (label[seed] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    std::deque<Coord> queue{seed};
    label[seed] = id;
    while (!queue.empty()) {
      Coord c = queue.front();
      queue.pop_front();
      comps[id].push_back(c);
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -zr; dz <= zr; ++dz) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            Coord n = {c[0] + dx * s, c[1] + dy * s, c[2] + dz * s};
            auto it = label.find(n);
            if (it != label.end() && it->second < 0) {
              it->second = id;
              queue.push_back(n);
            }
          }
        }
      }
    }
  }

  rep.component_count = static_cast<int>(comps.size());
  for (const auto& comp : comps) rep.component_sizes.push_back(static_cast<int>(comp.size()));

  if (comps.size() > 1) {
    int best = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < comps.size(); ++i) {
      for (std::size_t j = i + 1; j < comps.size(); ++j) {
        for (const Coord& a : comps[i]) {
          for (const Coord& b : comps[j]) {
            const int d = std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]),
                                    std::abs(a[2] - b[2])});
            best = std::min(best, d);
          }
        }
      }
    }
    rep.largest_gap = best;
  }
  return rep;
}

double center_coverage(const SparseGrid& g, const std::vector<BBox>& boxes) {
  if (g.dims() != 2) throw std::invalid_argument("center_coverage: grid must be 2D BEV");
  if (boxes.empty()) return 1.0;
  const int s = g.stride();
  int covered = 0;
  for (const BBox& b : boxes) {
    const int32_t vx = static_cast<int32_t>(std::floor(b.cx / g.voxel_size()));
    const int32_t vy = static_cast<int32_t>(std::floor(b.cy / g.voxel_size()));
    Coord cell = {floor_div(vx, s) * s, floor_div(vy, s) * s, 0};
    if (g.contains(cell)) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(boxes.size());
}

std::string dump_grid(const SparseGrid& g) {
  std::vector<std::size_t> order(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.coords()[a] < g.coords()[b];
  });
  std::ostringstream os;
  os.precision(9);
  for (std::size_t i : order) {
    const Coord& c = g.coords()[i];
    os << g.stride() << ' ' << c[0] << ' ' << c[1];
    if (g.dims() == 3) os << ' ' << c[2];
    os << " |";
    for (double f : g.features()[i]) os << ' ' << f;
    os << '\n';
  }
  return os.str();
}

}  // namespace coopdet
