#include "pottsmix/kernels.hpp"

#include <cmath>

#include <omp.h>

namespace pottsmix::kernels {

MatrixXd full_means(const ModelState& state) {
  MatrixXd means = MatrixXd::Zero(state.k(), state.num_times());
  means.bottomRows(state.k() - 1) = state.mu_active;
  return means;
}

namespace {

void voxel_row(const MixtureView& view, int v, MatrixXd& out, VectorXd& sum) {
  const Geometry& g = *view.geometry;
  const MatrixXd& s = *view.cluster_sources;
  const MatrixXd& mu = *view.means;
  const VectorXd& alpha = *view.alpha;
  const int k = static_cast<int>(mu.rows());
  const int t_len = static_cast<int>(s.cols());

  auto members = g.voxel_members(v);
  if (members.empty()) {
    out.row(v).setZero();
    return;
  }
  sum.setZero();
  double sumsq = 0.0;
  for (int j : members) {
    auto row = s.row(g.cluster_of(j));
    sum += row.transpose();
    sumsq += row.squaredNorm();
  }
  const double n = static_cast<double>(members.size());
  for (int h = 0; h < k; ++h) {
    const double rss = sumsq - 2.0 * mu.row(h).dot(sum) + n * mu.row(h).squaredNorm();
    out(v, h) = -0.5 * t_len * n * std::log(alpha[h]) - 0.5 * rss / alpha[h];
  }
}

}  // namespace

int best_label(const MatrixXd& scores, int voxel, double beta, const Labeling& labels, const Geometry& geometry) {
  const int k = static_cast<int>(scores.cols());
  auto nbrs = geometry.neighbors(voxel);
  int best = 0;
  double best_score = -INFINITY;
  for (int h = 0; h < k; ++h) {
    int count = 0;
    for (int u : nbrs) count += (labels[u] == h);
    const double s = scores(voxel, h) + 2.0 * beta * count;
    if (s > best_score) {
      best_score = s;
      best = h;
    }
  }
  return best;
}

namespace serial {

MatrixXd voxel_data_scores(const MixtureView& view) {
  const int nv = view.geometry->num_voxels();
  MatrixXd out(nv, view.means->rows());
  VectorXd sum(view.cluster_sources->cols());
  for (int v = 0; v < nv; ++v) voxel_row(view, v, out, sum);
  return out;
}

void sweep_color(Labeling& labels, const MatrixXd& scores, double beta, const Geometry& geometry, Color color) {
  for (int v = 0; v < geometry.num_voxels(); ++v) {
    if (geometry.color_of(v) != color) continue;
    labels.set(v, best_label(scores, v, beta, labels, geometry));
  }
}

void sweep_color_ordered(Labeling& labels, const MatrixXd& scores, double beta, const Geometry& geometry,
                         Color color, std::span<const int> order) {
  for (int v : order) {
    if (geometry.color_of(v) != color) continue;
    labels.set(v, best_label(scores, v, beta, labels, geometry));
  }
}

}  // namespace serial

namespace omp {

MatrixXd voxel_data_scores(const MixtureView& view) {
  const int nv = view.geometry->num_voxels();
  MatrixXd out(nv, view.means->rows());
#pragma omp parallel
  {
    VectorXd sum(view.cluster_sources->cols());
#pragma omp for schedule(static)
    for (int v = 0; v < nv; ++v) voxel_row(view, v, out, sum);
  }
  return out;
}

void sweep_color(Labeling& labels, const MatrixXd& scores, double beta, const Geometry& geometry, Color color) {
  const int nv = geometry.num_voxels();
  std::vector<int> next(labels.values());
#pragma omp parallel for schedule(static)
  for (int v = 0; v < nv; ++v) {
    if (geometry.color_of(v) != color) continue;
    next[v] = best_label(scores, v, beta, labels, geometry);
  }
  for (int v = 0; v < nv; ++v)
    if (geometry.color_of(v) == color) labels.set(v, next[v]);
}

}  // namespace omp

}  // namespace pottsmix::kernels
