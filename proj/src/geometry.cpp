#include "pottsmix/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pottsmix/errors.hpp"

namespace pottsmix {

namespace {

// CSR index of `keys` grouped by value in [0, buckets).
void group_by(const std::vector<int>& keys, int buckets, std::vector<int>& off, std::vector<int>& idx) {
  off.assign(buckets + 1, 0);
  for (int k : keys) ++off[k + 1];
  for (int b = 0; b < buckets; ++b) off[b + 1] += off[b];
  idx.resize(keys.size());
  std::vector<int> cursor(off.begin(), off.end() - 1);
  for (int j = 0; j < static_cast<int>(keys.size()); ++j) idx[cursor[keys[j]]++] = j;
}

}  // namespace

Geometry Geometry::build(std::vector<Point3> locations, GridDims dims) {
  if (locations.empty()) throw InvalidGeometryError("geometry needs at least one location");
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw InvalidGeometryError("grid dimensions must be >= 1");

  Geometry g;
  g.locations_ = std::move(locations);
  g.dims_ = dims;

  Point3 lo = g.locations_.front();
  Point3 hi = lo;
  for (const auto& p : g.locations_) {
    if (!p.allFinite()) throw InvalidGeometryError("non-finite location coordinate");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const std::array<int, 3> n{dims.nx, dims.ny, dims.nz};
  for (int d = 0; d < 3; ++d) {
    double extent = hi[d] - lo[d];
    if (extent <= 0.0) {
      // Flat along this axis: give it a unit extent centered on the points.
      lo[d] -= 0.5;
      extent = 1.0;
    }
    g.cell_size_[d] = extent / n[d];
  }
  g.origin_ = lo;

  const int np = static_cast<int>(g.locations_.size());
  g.voxel_of_.resize(np);
  for (int j = 0; j < np; ++j) {
    std::array<int, 3> c{};
    for (int d = 0; d < 3; ++d) {
      int i = static_cast<int>(std::floor((g.locations_[j][d] - g.origin_[d]) / g.cell_size_[d]));
      c[d] = std::clamp(i, 0, n[d] - 1);
    }
    g.voxel_of_[j] = g.voxel_index(c[0], c[1], c[2]);
  }

  const int nv = dims.count();
  g.colors_.resize(nv);
  g.neighbor_off_.assign(nv + 1, 0);
  g.neighbor_idx_.clear();
  g.neighbor_idx_.reserve(static_cast<std::size_t>(nv) * 6);
  for (int v = 0; v < nv; ++v) {
    auto [ix, iy, iz] = g.voxel_coords(v);
    g.colors_[v] = ((ix + iy + iz) % 2 == 0) ? Color::black : Color::white;
    const int cand[6][3] = {{ix - 1, iy, iz}, {ix + 1, iy, iz}, {ix, iy - 1, iz},
                            {ix, iy + 1, iz}, {ix, iy, iz - 1}, {ix, iy, iz + 1}};
    for (const auto& c : cand) {
      if (c[0] < 0 || c[1] < 0 || c[2] < 0 || c[0] >= dims.nx || c[1] >= dims.ny || c[2] >= dims.nz) continue;
      g.neighbor_idx_.push_back(g.voxel_index(c[0], c[1], c[2]));
    }
    g.neighbor_off_[v + 1] = static_cast<int>(g.neighbor_idx_.size());
  }

  g.cluster_of_.resize(np);
  for (int j = 0; j < np; ++j) g.cluster_of_[j] = j;
  g.num_clusters_ = np;
  g.index_members();
  return g;
}

Geometry Geometry::with_clusters(std::vector<int> cluster_of) const {
  if (static_cast<int>(cluster_of.size()) != num_locations())
    throw InvalidGeometryError("cluster map has " + std::to_string(cluster_of.size()) + " entries, expected " +
                               std::to_string(num_locations()));
  int j_count = 0;
  for (int c : cluster_of) {
    if (c < 0) throw InvalidGeometryError("negative cluster id");
    j_count = std::max(j_count, c + 1);
  }
  std::vector<int> sizes(j_count, 0);
  for (int c : cluster_of) ++sizes[c];
  for (int c = 0; c < j_count; ++c)
    if (sizes[c] == 0) throw InvalidGeometryError("cluster " + std::to_string(c) + " is empty");

  Geometry g = *this;
  g.cluster_of_ = std::move(cluster_of);
  g.num_clusters_ = j_count;
  g.index_members();
  return g;
}

void Geometry::index_members() {
  group_by(voxel_of_, num_voxels(), voxel_member_off_, voxel_member_idx_);
  group_by(cluster_of_, num_clusters_, cluster_member_off_, cluster_member_idx_);
}

std::array<int, 3> Geometry::voxel_coords(int v) const {
  const int ix = v % dims_.nx;
  const int iy = (v / dims_.nx) % dims_.ny;
  const int iz = v / (dims_.nx * dims_.ny);
  return {ix, iy, iz};
}

Point3 Geometry::cell_min(int v) const {
  auto [ix, iy, iz] = voxel_coords(v);
  return origin_ + cell_size_.cwiseProduct(Point3(ix, iy, iz));
}

Point3 Geometry::cell_max(int v) const {
  auto [ix, iy, iz] = voxel_coords(v);
  return origin_ + cell_size_.cwiseProduct(Point3(ix + 1, iy + 1, iz + 1));
}

}  // namespace pottsmix
