#pragma once

#include <vector>

#include "pottsmix/geometry.hpp"
#include "pottsmix/model.hpp"

namespace pottsmix::metrics {

/// Pearson correlation of the two matrices flattened over all entries.
double source_correlation(const MatrixXd& estimate, const MatrixXd& truth);

struct TmseResult {
  double active = 0.0;
  double inactive = 0.0;
  bool active_empty = false;
  bool inactive_empty = false;
};

/// Per-(j, t) mean squared error over replicates, summed separately over
/// active and inactive locations.
TmseResult tmse(const std::vector<MatrixXd>& estimates, const MatrixXd& truth, const std::vector<bool>& active_mask);

struct RateResult {
  double p_fp = 0.0;
  double p_fn = 0.0;
  bool fp_undefined = false;  // no location declared active
  bool fn_undefined = false;  // no location declared inactive
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Location-level confusion counts, where a location is active when its
/// voxel's label is not the inactive component.
/// p_fp = FP / (FP + TP), p_fn = FN / (FN + TN).
RateResult fp_fn_rates(const Labeling& estimated, const Labeling& truth, const Geometry& geometry);

/// sum_t S_j(t)^2 per row.
VectorXd power_map(const MatrixXd& sources);

struct ModalityResiduals {
  MatrixXd residuals;  // n x T
  MatrixXd fitted;     // n x T
  VectorXd qq_theoretical;  // standard-normal quantiles at (i - 0.5) / N
  VectorXd qq_sample;       // sorted residuals
};

struct ResidualDiagnostics {
  ModalityResiduals meg;
  ModalityResiduals eeg;
};

/// Residuals M - X_M S and E - X_E S with location-level sources (P x T).
ResidualDiagnostics residual_diagnostics(const SensorDataset& dataset, const LeadFieldPair& leadfields,
                                         const MatrixXd& sources);

}  // namespace pottsmix::metrics
