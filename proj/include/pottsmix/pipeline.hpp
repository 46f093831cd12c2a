#pragma once

#include <cstdint>

#include "pottsmix/geometry.hpp"
#include "pottsmix/icm.hpp"
#include "pottsmix/model.hpp"
#include "pottsmix/smoothing.hpp"

namespace pottsmix {

struct PipelineConfig {
  int k = 2;
  int clusters = 100;  // J; values >= P keep every location separate
  std::uint64_t seed = 0;
  Hyperparams hyper;
  icm::SolverConfig solver;  // solver.k is overwritten by k
  smoothing::LoessOptions loess;
  bool smoothing = true;
};

struct PipelineResult {
  Geometry geometry;            // with the J-cluster partition
  icm::FitResult fit;           // standardized units, unsmoothed
  StandardizationScales scales;
  MatrixXd sources_raw;         // P x T, data units, unsmoothed
  MatrixXd sources_smoothed;    // P x T, data units, smoothed (empty when smoothing is off)

  const MatrixXd& sources() const { return sources_smoothed.size() ? sources_smoothed : sources_raw; }
};

/// standardize -> cluster -> initialize -> ICM -> optional smoothing. Sources
/// are returned in the units implied by the unstandardized operators.
PipelineResult run_pipeline(const SensorDataset& dataset, const LeadFieldPair& leadfields, const Geometry& geometry,
                            const PipelineConfig& config, const icm::BlockObserver& observer = {});

}  // namespace pottsmix
