#pragma once

#include "pottsmix/model.hpp"

namespace pottsmix::smoothing {

struct LoessOptions {
  double span = 0.75;
  int degree = 2;

  void validate() const;
};

/// Local polynomial regression on the integer grid 0..T-1. At each index the
/// ceil(span * T) nearest indices are fitted by weighted least squares with
/// tricube weights (1 - (d / h)^3)^3, where h is one more than the largest
/// distance in the window so that every window point keeps positive weight.
VectorXd loess_smooth(const VectorXd& series, const LoessOptions& options = {});

/// Smooths every row of a sources matrix.
MatrixXd smooth_rows(const MatrixXd& sources, const LoessOptions& options = {});

/// Copy of `state` with every cluster series smoothed.
ModelState smooth_sources(const ModelState& state, const LoessOptions& options = {});

}  // namespace pottsmix::smoothing
