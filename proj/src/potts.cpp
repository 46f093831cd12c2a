#include "pottsmix/potts.hpp"

#include <algorithm>
#include <cmath>

#include "pottsmix/errors.hpp"

namespace pottsmix::potts {

PottsContext::PottsContext(const Geometry& g, int num_components) : geometry(&g), k(num_components) {
  if (num_components < 2) throw DomainError("Potts model needs K >= 2");
}

double delta_interaction(const VectorXd& z_i, const VectorXd& z_j) {
  auto is_one_hot = [](const VectorXd& z) {
    int ones = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z[i] == 1.0) {
        ++ones;
      } else if (z[i] != 0.0) {
        return false;
      }
    }
    return ones == 1;
  };
  if (z_i.size() != z_j.size()) throw InvalidLabelError("label vectors differ in length");
  if (!is_one_hot(z_i) || !is_one_hot(z_j)) throw InvalidLabelError("label vector is not one-hot");
  return 2.0 * z_i.dot(z_j) - 1.0;
}

double beta_crit(int k) {
  if (k < 2) throw DomainError("beta_crit needs K >= 2");
  return (2.0 / 3.0) * std::log(0.5 * (std::sqrt(2.0) + std::sqrt(4.0 * k - 2.0)));
}

std::vector<int> neighbor_label_counts(const Labeling& labels, int voxel, const PottsContext& ctx) {
  std::vector<int> counts(ctx.k, 0);
  for (int u : ctx.geometry->neighbors(voxel)) ++counts[labels[u]];
  return counts;
}

PseudolikelihoodTable::PseudolikelihoodTable(const Labeling& labels, const PottsContext& ctx) : k_(ctx.k) {
  const Geometry& g = *ctx.geometry;
  if (labels.num_voxels() != g.num_voxels()) throw InvalidLabelError("labeling does not match the voxel grid");
  if (labels.k() != ctx.k) throw InvalidLabelError("labeling K does not match the Potts context");
  const int nv = g.num_voxels();
  counts_.assign(static_cast<std::size_t>(nv) * k_, 0);
  for (int v = 0; v < nv; ++v) {
    int* row = counts_.data() + static_cast<std::size_t>(v) * k_;
    for (int u : g.neighbors(v)) ++row[labels[u]];
    agreement_ += row[labels[v]];
  }
}

double PseudolikelihoodTable::value(double beta) const {
  const int nv = static_cast<int>(counts_.size() / k_);
  double log_norm = 0.0;
  for (int v = 0; v < nv; ++v) {
    const int* row = counts_.data() + static_cast<std::size_t>(v) * k_;
    const int top = *std::max_element(row, row + k_);
    double s = 0.0;
    for (int q = 0; q < k_; ++q) s += std::exp(2.0 * beta * (row[q] - top));
    log_norm += 2.0 * beta * top + std::log(s);
  }
  return 2.0 * beta * agreement_ - log_norm;
}

double PseudolikelihoodTable::gradient(double beta) const {
  const int nv = static_cast<int>(counts_.size() / k_);
  double expected = 0.0;
  for (int v = 0; v < nv; ++v) {
    const int* row = counts_.data() + static_cast<std::size_t>(v) * k_;
    const int top = *std::max_element(row, row + k_);
    double s = 0.0, sn = 0.0;
    for (int q = 0; q < k_; ++q) {
      const double w = std::exp(2.0 * beta * (row[q] - top));
      s += w;
      sn += w * row[q];
    }
    expected += sn / s;
  }
  return 2.0 * (agreement_ - expected);
}

double log_pseudolikelihood(const Labeling& labels, double beta, const PottsContext& ctx) {
  return PseudolikelihoodTable(labels, ctx).value(beta);
}

double pseudolikelihood_gradient(const Labeling& labels, double beta, const PottsContext& ctx) {
  return PseudolikelihoodTable(labels, ctx).gradient(beta);
}

double maximize_beta(const Labeling& labels, const PottsContext& ctx) {
  const PseudolikelihoodTable table(labels, ctx);
  const double upper = beta_crit(ctx.k);
  constexpr double tol = 1e-8;

  if (table.gradient(0.0) <= 0.0) return 0.0;
  if (table.gradient(upper) >= 0.0) return upper;

  double lo = 0.0, hi = upper;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (table.gradient(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Concavity makes H unimodal; pick the better endpoint of the final bracket.
  return table.value(lo) >= table.value(hi) ? lo : hi;
}

}  // namespace pottsmix::potts
