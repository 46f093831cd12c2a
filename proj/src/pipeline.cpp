#include "pottsmix/pipeline.hpp"

#include <algorithm>
#include <random>

#include "pottsmix/errors.hpp"
#include "pottsmix/init.hpp"

namespace pottsmix {

PipelineResult run_pipeline(const SensorDataset& dataset, const LeadFieldPair& leadfields, const Geometry& geometry,
                            const PipelineConfig& config, const icm::BlockObserver& observer) {
  dataset.validate();
  leadfields.validate();
  if (leadfields.num_sources() != geometry.num_locations())
    throw InvalidGeometryError("lead fields have " + std::to_string(leadfields.num_sources()) +
                               " columns but the geometry has " + std::to_string(geometry.num_locations()) +
                               " locations");
  if (config.clusters < 1) throw ParameterError("cluster count J must be >= 1");

  std::seed_seq seq{config.seed, std::uint64_t{0x5eed}};
  std::mt19937_64 rng(seq);
  const std::uint64_t cluster_seed = rng();
  const std::uint64_t init_seed = rng();

  PipelineResult out;
  Standardized std_in = standardize(dataset, leadfields);
  out.scales = std_in.scales;
  out.geometry = init::cluster_locations(geometry, std::min(config.clusters, geometry.num_locations()), cluster_seed);

  ModelState initial =
      init::initial_state(std_in.dataset, std_in.leadfields, out.geometry, config.k, config.hyper, init_seed);
  icm::SolverConfig solver = config.solver;
  solver.k = config.k;
  solver.seed = init_seed;
  out.fit = icm::fit(std_in.dataset, std_in.leadfields, out.geometry, config.hyper, solver, std::move(initial),
                     observer);

  const double scale = out.scales.source_scale();
  out.sources_raw = expand_sources(out.fit.state.sources, out.geometry) * scale;
  if (config.smoothing) {
    const MatrixXd smoothed = smoothing::smooth_rows(out.fit.state.sources, config.loess);
    out.sources_smoothed = expand_sources(smoothed, out.geometry) * scale;
  }
  return out;
}

}  // namespace pottsmix
