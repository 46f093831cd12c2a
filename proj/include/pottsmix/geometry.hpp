#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pottsmix {

using Point3 = Eigen::Vector3d;

struct GridDims {
  int nx = 8;
  int ny = 8;
  int nz = 8;

  int count() const { return nx * ny * nz; }
  bool operator==(const GridDims&) const = default;
};

enum class Color : std::uint8_t { black = 0, white = 1 };

/// Cortical locations embedded in a regular voxel grid, plus the cluster
/// partition used to tie source time series together.
///
/// Voxels are indexed x-fastest: v = ix + nx * (iy + ny * iz). Neighbors are
/// the face-adjacent voxels (first-order neighborhood, at most six). Colors
/// follow the parity of ix + iy + iz, so adjacent voxels never share a color.
class Geometry {
 public:
  Geometry() = default;

  /// Bins `locations` into a grid spanning their bounding box. Every location
  /// gets its own cluster.
  static Geometry build(std::vector<Point3> locations, GridDims dims);

  /// Same geometry with a new location -> cluster map. Cluster ids must cover
  /// 0..J-1 with no empty cluster.
  Geometry with_clusters(std::vector<int> cluster_of) const;

  int num_locations() const { return static_cast<int>(locations_.size()); }
  int num_voxels() const { return dims_.count(); }
  int num_clusters() const { return num_clusters_; }
  const GridDims& grid_dims() const { return dims_; }

  const std::vector<Point3>& locations() const { return locations_; }
  const Point3& location(int j) const { return locations_[j]; }
  int voxel_of(int j) const { return voxel_of_[j]; }
  int cluster_of(int j) const { return cluster_of_[j]; }
  const std::vector<int>& voxel_map() const { return voxel_of_; }
  const std::vector<int>& cluster_map() const { return cluster_of_; }

  std::span<const int> neighbors(int v) const {
    return {neighbor_idx_.data() + neighbor_off_[v], neighbor_idx_.data() + neighbor_off_[v + 1]};
  }
  Color color_of(int v) const { return colors_[v]; }

  /// Locations contained in voxel v.
  std::span<const int> voxel_members(int v) const {
    return {voxel_member_idx_.data() + voxel_member_off_[v],
            voxel_member_idx_.data() + voxel_member_off_[v + 1]};
  }
  /// Locations tied to cluster c.
  std::span<const int> cluster_members(int c) const {
    return {cluster_member_idx_.data() + cluster_member_off_[c],
            cluster_member_idx_.data() + cluster_member_off_[c + 1]};
  }

  std::array<int, 3> voxel_coords(int v) const;
  int voxel_index(int ix, int iy, int iz) const { return ix + dims_.nx * (iy + dims_.ny * iz); }

  /// Cell bounds of voxel v in location coordinates.
  Point3 cell_min(int v) const;
  Point3 cell_max(int v) const;

 private:
  void index_members();

  std::vector<Point3> locations_;
  GridDims dims_;
  Point3 origin_ = Point3::Zero();
  Point3 cell_size_ = Point3::Ones();
  std::vector<int> voxel_of_;
  std::vector<int> cluster_of_;
  int num_clusters_ = 0;
  std::vector<int> neighbor_off_;
  std::vector<int> neighbor_idx_;
  std::vector<Color> colors_;
  std::vector<int> voxel_member_off_;
  std::vector<int> voxel_member_idx_;
  std::vector<int> cluster_member_off_;
  std::vector<int> cluster_member_idx_;
};

}  // namespace pottsmix
