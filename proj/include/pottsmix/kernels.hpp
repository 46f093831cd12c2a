#pragma once

#include "pottsmix/geometry.hpp"
#include "pottsmix/model.hpp"

// Hot loops of the label update. Each kernel has a serial reference version
// and an OpenMP version; both must produce bit-identical results.
namespace pottsmix::kernels {

/// Inputs of the per-voxel mixture log-score
///   score(v, h) = -(T N_v / 2) log alpha_h - (1 / (2 alpha_h)) sum_{j in v} sum_t (S_j(t) - mu_h(t))^2
/// where N_v is the number of locations in voxel v.
struct MixtureView {
  const Geometry* geometry;
  const MatrixXd* cluster_sources;  // J x T
  const MatrixXd* means;            // K x T, row 0 is the inactive (zero) mean
  const VectorXd* alpha;            // K
};

/// Rows of `means` are the full K component means (inactive row included).
MatrixXd full_means(const ModelState& state);

namespace serial {

MatrixXd voxel_data_scores(const MixtureView& view);

/// Updates every voxel of `color` in index order to
/// argmax_h score(v, h) + 2 beta n_v(h), ties to the smallest h.
void sweep_color(Labeling& labels, const MatrixXd& scores, double beta, const Geometry& geometry, Color color);

/// Same update visiting the voxels of `color` in the given order.
void sweep_color_ordered(Labeling& labels, const MatrixXd& scores, double beta, const Geometry& geometry,
                         Color color, std::span<const int> order);

}  // namespace serial

namespace omp {

MatrixXd voxel_data_scores(const MixtureView& view);

/// Simultaneous update of one color class; voxels of one color share no
/// neighbors, so every voxel reads only labels of the other color.
void sweep_color(Labeling& labels, const MatrixXd& scores, double beta, const Geometry& geometry, Color color);

}  // namespace omp

/// argmax_h score(h) + 2 beta n(h) for one voxel; ties go to the smallest h.
int best_label(const MatrixXd& scores, int voxel, double beta, const Labeling& labels, const Geometry& geometry);

}  // namespace pottsmix::kernels
