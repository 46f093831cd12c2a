#pragma once

#include <vector>

#include "pottsmix/geometry.hpp"
#include "pottsmix/model.hpp"

namespace pottsmix::potts {

struct PottsContext {
  const Geometry* geometry = nullptr;
  int k = 2;

  PottsContext(const Geometry& g, int num_components);
};

/// +1 when both one-hot vectors select the same label, -1 otherwise.
double delta_interaction(const VectorXd& z_i, const VectorXd& z_j);

/// Approximate phase-transition point of the K-state Potts model on a 3-D
/// lattice: (2/3) ln{(sqrt(2) + sqrt(4K - 2)) / 2}.
double beta_crit(int k);

/// Count of neighbors of `voxel` carrying each label.
std::vector<int> neighbor_label_counts(const Labeling& labels, int voxel, const PottsContext& ctx);

/// Log pseudolikelihood
///   H(beta) = sum_i [ 2 beta n_i(z_i) - log sum_q exp(2 beta n_i(q)) ]
/// where n_i(q) counts neighbors of voxel i labelled q.
double log_pseudolikelihood(const Labeling& labels, double beta, const PottsContext& ctx);

/// dH/dbeta.
double pseudolikelihood_gradient(const Labeling& labels, double beta, const PottsContext& ctx);

/// argmax of H over [0, beta_crit(K)]. H is concave in beta, so the search
/// brackets the sign change of H' and bisects to 1e-8. Returns 0 when H is
/// flat (no neighbor agreement information).
double maximize_beta(const Labeling& labels, const PottsContext& ctx);

/// Neighbor-count table reused across many beta evaluations.
class PseudolikelihoodTable {
 public:
  PseudolikelihoodTable(const Labeling& labels, const PottsContext& ctx);

  double value(double beta) const;
  double gradient(double beta) const;
  /// Sum over voxels of the neighbor count of the voxel's own label.
  double agreement() const { return agreement_; }

 private:
  int k_;
  std::vector<int> counts_;  // num_voxels x k, row-major
  double agreement_ = 0.0;
};

}  // namespace pottsmix::potts
