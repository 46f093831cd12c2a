#pragma once

#include <cstdint>
#include <functional>
#include <string_view>

#include "pottsmix/geometry.hpp"
#include "pottsmix/model.hpp"
#include "pottsmix/potts.hpp"

namespace pottsmix::icm {

struct SolverConfig {
  int max_iters = 50;
  double tol = 1e-3;  // relative Frobenius change of the expanded sources
  int k = 2;
  bool track_objective = true;
  std::uint64_t seed = 0;
  bool parallel_labels = true;

  void validate() const;
};

/// The blocks of one ICM iteration, in update order.
enum class Block {
  sigma2_m,
  sigma2_e,
  sigma2_a,
  a_matrix,
  alpha,
  mu,
  sources,
  labels_black,
  labels_white,
  beta,
};
inline constexpr int kNumBlocks = 10;
std::string_view block_name(Block b);

/// Called after every block update with the current state.
using BlockObserver = std::function<void(Block, int iteration, const ModelState&)>;

// Conditional-mode block updates. Operators passed here are the collapsed,
// cluster-level ones (J columns, matching state.sources).

double update_sigma_m(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                      const Hyperparams& hyper);
double update_sigma_e(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                      const Hyperparams& hyper);
double update_sigma_a(const ModelState& state, const Hyperparams& hyper);
MatrixXd update_a_matrix(const ModelState& state, const Hyperparams& hyper);
VectorXd update_alpha(const ModelState& state, const Geometry& geometry, const Hyperparams& hyper);

/// Sweeps t = 1..T, setting each mu^A(t) to the mean of its Gaussian full
/// conditional given the latest neighbors in time.
MatrixXd update_mu(const ModelState& state, const Geometry& geometry, const Hyperparams& hyper);

/// Gauss-Seidel sweep over clusters j = 1..J; each cluster series is set to
/// its conditional mode given the latest values of all other clusters.
MatrixXd update_sources(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                        const Geometry& geometry);

/// Both chequerboard sweeps (black then white).
Labeling update_labels(const ModelState& state, const Geometry& geometry, const potts::PottsContext& ctx,
                       bool parallel = true);

/// One color class of the label update, applied to `labels` in place.
void update_label_color(Labeling& labels, const ModelState& state, const Geometry& geometry, Color color,
                        bool parallel = true);

/// Log joint density with the Potts term replaced by its pseudolikelihood.
/// `leadfields` are the location-level operators (P columns).
double surrogate_log_posterior(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                               const Geometry& geometry, const Hyperparams& hyper, const potts::PottsContext& ctx);

/// Number of components holding at least one voxel.
int estimate_k(const Labeling& labels);

struct FitResult {
  ModelState state;
  FitReport report;
};

/// Runs ICM from `initial` until the relative change of the expanded sources
/// drops below config.tol or config.max_iters is reached.
FitResult fit(const SensorDataset& dataset, const LeadFieldPair& leadfields, const Geometry& geometry,
              const Hyperparams& hyper, const SolverConfig& config, ModelState initial,
              const BlockObserver& observer = {});

}  // namespace pottsmix::icm
