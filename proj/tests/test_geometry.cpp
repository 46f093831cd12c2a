#include <algorithm>
#include <random>

#include "doctest.h"
#include "pottsmix/errors.hpp"
#include "pottsmix/geometry.hpp"

using namespace pottsmix;

namespace {

Geometry random_geometry(std::mt19937_64& rng, int p, GridDims dims) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point3> locs(p);
  for (auto& x : locs) x = Point3(u(rng), u(rng), u(rng));
  return Geometry::build(locs, dims);
}

}  // namespace

TEST_CASE("neighborhoods are symmetric, face-adjacent and two-colored") {
  std::mt19937_64 rng(1);
  const Geometry g = random_geometry(rng, 200, {4, 5, 3});
  CHECK(g.num_voxels() == 60);
  for (int v = 0; v < g.num_voxels(); ++v) {
    const auto [x, y, z] = g.voxel_coords(v);
    CHECK(g.voxel_index(x, y, z) == v);
    for (int u : g.neighbors(v)) {
      auto back = g.neighbors(u);
      CHECK(std::find(back.begin(), back.end(), v) != back.end());
      CHECK(g.color_of(u) != g.color_of(v));
      const auto [a, b, c] = g.voxel_coords(u);
      CHECK(std::abs(a - x) + std::abs(b - y) + std::abs(c - z) == 1);
    }
  }
}

TEST_CASE("neighbor counts: corners 3, interior 6") {
  std::mt19937_64 rng(2);
  const Geometry g = random_geometry(rng, 50, {3, 3, 3});
  CHECK(g.neighbors(g.voxel_index(0, 0, 0)).size() == 3);
  CHECK(g.neighbors(g.voxel_index(1, 1, 1)).size() == 6);
  CHECK(g.neighbors(g.voxel_index(1, 0, 0)).size() == 4);
}

TEST_CASE("every location lies in its voxel's cell") {
  std::mt19937_64 rng(3);
  const Geometry g = random_geometry(rng, 500, {6, 6, 6});
  int total = 0;
  for (int j = 0; j < g.num_locations(); ++j) {
    const int v = g.voxel_of(j);
    const Point3 lo = g.cell_min(v), hi = g.cell_max(v);
    CHECK((g.location(j).array() >= lo.array() - 1e-12).all());
    CHECK((g.location(j).array() <= hi.array() + 1e-12).all());
  }
  for (int v = 0; v < g.num_voxels(); ++v) total += static_cast<int>(g.voxel_members(v).size());
  CHECK(total == 500);
}

TEST_CASE("cluster partitions") {
  std::mt19937_64 rng(4);
  const Geometry g = random_geometry(rng, 6, {2, 1, 1});
  CHECK(g.num_clusters() == 6);
  const Geometry c = g.with_clusters({2, 0, 1, 0, 2, 1});
  CHECK(c.num_clusters() == 3);
  CHECK(c.cluster_members(0).size() == 2);
  CHECK_THROWS_AS(g.with_clusters({0, 0, 2, 2, 0, 0}), InvalidGeometryError);
  CHECK_THROWS_AS(g.with_clusters({0, 1}), InvalidGeometryError);
}

TEST_CASE("build rejects empty input and bad grids") {
  CHECK_THROWS_AS(Geometry::build({}, {2, 2, 2}), InvalidGeometryError);
  CHECK_THROWS_AS(Geometry::build({Point3(0, 0, 0)}, {0, 2, 2}), InvalidGeometryError);
  const Geometry one = Geometry::build({Point3(1, 2, 3)}, {2, 2, 2});
  CHECK(one.num_locations() == 1);
}
