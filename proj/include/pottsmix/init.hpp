#pragma once

#include <cstdint>
#include <vector>

#include "pottsmix/geometry.hpp"
#include "pottsmix/model.hpp"

namespace pottsmix::init {

/// Ridge estimate for every time point: argmin_s |y(t) - X s|^2 + lambda |s|^2
/// with y stacking MEG over EEG rows and X stacking X_M over X_E. Returns P x T.
MatrixXd ridge_initial_sources(const SensorDataset& dataset, const LeadFieldPair& leadfields, double lambda);

/// 1e-2 * trace(X^T X) / P for the stacked operator.
double default_ridge_lambda(const LeadFieldPair& leadfields);

struct KMeansResult {
  std::vector<int> assignments;  // N entries in [0, k)
  MatrixXd centers;              // k x d
  double sse = 0.0;
  int iterations = 0;
};

/// Lloyd's algorithm on the rows of `points` with farthest-point seeding. The
/// first center is drawn from `seed`; the rest are the points farthest from
/// the chosen set. Empty clusters are re-seeded from the point farthest from
/// its center.
KMeansResult kmeans(const MatrixXd& points, int k, std::uint64_t seed, int max_iters = 300);

/// K-means of the 3-D location coordinates into j clusters.
Geometry cluster_locations(const Geometry& geometry, int j, std::uint64_t seed);

struct InitOptions {
  int k = 2;
  std::uint64_t seed = 0;
  double ridge_lambda = 0.0;  // <= 0 selects default_ridge_lambda
};

/// Everything `initial_state` derives, kept for inspection and tests.
struct InitialEstimate {
  ModelState state;
  MatrixXd ridge_sources;              // P x T
  std::vector<int> location_component;  // K-means group of every location, after relabeling
};

InitialEstimate initial_estimate(const SensorDataset& dataset, const LeadFieldPair& leadfields,
                                 const Geometry& geometry, const Hyperparams& hyper, const InitOptions& options);

ModelState initial_state(const SensorDataset& dataset, const LeadFieldPair& leadfields, const Geometry& geometry,
                         int k, const Hyperparams& hyper, std::uint64_t seed);

/// Per-voxel majority label of the contained locations; ties go to the lower
/// label, empty voxels get label 0.
Labeling majority_vote(const Geometry& geometry, const std::vector<int>& location_labels, int k);

}  // namespace pottsmix::init
