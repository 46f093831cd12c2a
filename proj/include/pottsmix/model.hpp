#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pottsmix/geometry.hpp"

namespace pottsmix {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observed MEG (n_M x T) and EEG (n_E x T) evoked responses.
struct SensorDataset {
  MatrixXd meg;
  MatrixXd eeg;
  VectorXd sample_times;
  bool standardized = false;

  int n_meg() const { return static_cast<int>(meg.rows()); }
  int n_eeg() const { return static_cast<int>(eeg.rows()); }
  int num_times() const { return static_cast<int>(meg.cols()); }

  /// Throws DegenerateInputError on shape violations.
  void validate() const;
};

/// Forward operators and sensor-noise covariance structure.
struct LeadFieldPair {
  MatrixXd x_meg;
  MatrixXd x_eeg;
  MatrixXd h_meg;
  MatrixXd h_eeg;

  /// Operators with H_M = H_E = I.
  static LeadFieldPair with_identity_noise(MatrixXd x_meg, MatrixXd x_eeg);

  int num_sources() const { return static_cast<int>(x_meg.cols()); }

  /// Checks column agreement and that both H matrices are SPD (via Cholesky).
  void validate() const;
};

/// One-hot voxel labels, stored as a component index in [0, K).
/// Component 0 is the inactive state.
class Labeling {
 public:
  Labeling() = default;
  Labeling(int num_voxels, int k, int fill = 0);
  Labeling(std::vector<int> labels, int k);

  int num_voxels() const { return static_cast<int>(labels_.size()); }
  int k() const { return k_; }
  int operator[](int v) const { return labels_[v]; }
  void set(int v, int label);
  VectorXd one_hot(int v) const;
  const std::vector<int>& values() const { return labels_; }

  /// Number of voxels per component.
  std::vector<int> counts() const;

  bool operator==(const Labeling&) const = default;

 private:
  std::vector<int> labels_;
  int k_ = 0;
};

struct Hyperparams {
  double a_e = 0.01, b_e = 0.01;
  double a_m = 0.01, b_m = 0.01;
  double a_alpha = 0.01, b_alpha = 0.01;
  double a_a = 0.01, b_a = 0.01;
  double sigma2_A = 10.0;
  double sigma2_mu1 = 10.0;

  void validate() const;
};

/// Complete parameter set. Sources are stored per cluster (J x T).
struct ModelState {
  MatrixXd sources;    // J x T
  Labeling labels;
  MatrixXd mu_active;  // (K-1) x T; the inactive mean is identically zero
  MatrixXd a_matrix;   // (K-1) x (K-1)
  double sigma2_a = 1.0;
  double sigma2_m = 1.0;
  double sigma2_e = 1.0;
  VectorXd alpha;      // K
  double beta = 0.0;

  int k() const { return labels.k(); }
  int num_times() const { return static_cast<int>(sources.cols()); }
  /// Mean of component l at time t (l = 0 is the inactive component).
  double mu(int l, int t) const { return l == 0 ? 0.0 : mu_active(l - 1, t); }

  void validate() const;
  bool operator==(const ModelState& o) const;
};

struct FitReport {
  std::vector<double> objective_trace;
  int k_hat = 0;
  int iterations = 0;
  bool converged = false;
  VectorXd power_map;
  double wall_time = 0.0;
};

/// Per-matrix divisors applied by `standardize`.
struct StandardizationScales {
  double meg = 1.0;
  double eeg = 1.0;
  double x_meg = 1.0;
  double x_eeg = 1.0;

  /// Factor converting standardized-unit sources back to the units of the
  /// raw operators (geometric mean of the MEG and EEG ratios).
  double source_scale() const;
};

struct Standardized {
  SensorDataset dataset;
  LeadFieldPair leadfields;
  StandardizationScales scales;
};

/// sqrt((1/rows) * trace(A A^T)).
double rms_trace_scale(const MatrixXd& a);

/// Divides M, E, X_M, X_E each by sqrt((1/n) trace(A A^T)).
Standardized standardize(const SensorDataset& dataset, const LeadFieldPair& leadfields);

/// Sums the lead-field columns of each cluster (J columns out).
LeadFieldPair collapse_leadfield(const LeadFieldPair& leadfields, const Geometry& geometry);

/// Cluster-level sources (J x T) to location-level sources (P x T).
MatrixXd expand_sources(const MatrixXd& cluster_sources, const Geometry& geometry);
MatrixXd expand_sources(const ModelState& state, const Geometry& geometry);

/// Per-cluster means of location-level sources.
MatrixXd cluster_average(const MatrixXd& location_sources, const Geometry& geometry);

}  // namespace pottsmix
