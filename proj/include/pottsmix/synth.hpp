#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pottsmix/geometry.hpp"
#include "pottsmix/model.hpp"

namespace pottsmix::synth {

/// Ground truth of a simulated experiment.
struct Scene {
  Geometry geometry;
  Labeling true_labels;  // per voxel
  MatrixXd signals;      // K x T, row 0 (inactive) all zeros
  MatrixXd true_sources; // P x T, row j = signal of j's voxel label

  int num_components() const { return static_cast<int>(signals.rows()); }
};

/// p points on a sphere shell centred at the origin with radius uniform in
/// [0.95, 1.05], binned into a grid spanning their bounding box.
Geometry make_geometry(int p, GridDims dims, std::uint64_t seed);

/// Smooth synthetic forward operators. Each sensor row is
/// sqrt(2) cos(w_i . p_j + b_i) with w_i ~ N(0, I / smoothness^2) and
/// b_i ~ U[0, 2 pi), so that the expected inner product of two columns is the
/// squared-exponential kernel exp(-|p - q|^2 / (2 smoothness^2)). H = I.
LeadFieldPair make_leadfield(const Geometry& geometry, int n_meg, int n_eeg, double smoothness, std::uint64_t seed);

/// Undirected k-nearest-neighbor graph over the locations (symmetrized).
std::vector<std::vector<int>> location_adjacency(const Geometry& geometry, int k = 6);

/// Grows disjoint connected patches of the given sizes. Each patch starts at
/// a random free location and repeatedly absorbs the free graph neighbor
/// closest to its seed. Returns a patch index per location, -1 for locations
/// outside every patch.
std::vector<int> grow_patches(const Geometry& geometry, const std::vector<int>& sizes, std::uint64_t seed);

/// n_active equal-size patches; patch i gets component i + 1. Voxel labels by
/// majority vote over the contained locations.
Labeling make_regions(const Geometry& geometry, int n_active, int region_size, std::uint64_t seed);

enum class SignalKind { gaussian_bump, sinusoid };

struct SignalSpec {
  SignalKind kind = SignalKind::gaussian_bump;
  double amplitude = 10.0;
  double peak = 0.0;       // bump centre (time index)
  double width = 5.0;      // bump standard deviation (time indices)
  double frequency = 0.0;  // sinusoid cycles per time index
  double phase = 0.0;
};

/// Values at t = 0..num_times-1.
VectorXd make_signal(const SignalSpec& spec, int num_times);

/// Noisy sensor data for a scene: clean X S_true plus, per sensor, Gaussian
/// noise with variance noise_fraction times the temporal variance of that
/// sensor's clean series.
SensorDataset generate_dataset(const Scene& scene, const LeadFieldPair& leadfields, double noise_fraction,
                               std::uint64_t seed);

/// Every generation parameter of a simulated experiment.
struct ScenarioConfig {
  std::string name = "custom";
  int num_locations = 1000;
  GridDims grid{8, 8, 8};
  int n_meg = 30;
  int n_eeg = 20;
  int num_times = 60;
  double smoothness = 0.3;
  double noise_fraction = 0.05;
  std::vector<int> region_sizes;       // one patch per entry
  std::vector<int> region_components;  // component (>= 1) of each patch
  std::vector<SignalSpec> signals;     // one per active component 1..K-1

  int true_k() const { return static_cast<int>(signals.size()) + 1; }
  void validate() const;
};

/// Named scenarios: two-state, three-state, four-state, four-state-sinusoid,
/// nine-state, each also with a "-less-separated" suffix. Region sizes are
/// given for 1000 locations and scale linearly with num_locations; signal
/// timing scales with num_times.
ScenarioConfig preset(const std::string& name, int num_locations = 1000, int num_times = 60);
std::vector<std::string> preset_names();

/// Builds geometry, patches and signals from scene_seed.
Scene make_scene(const ScenarioConfig& config, std::uint64_t scene_seed);

struct Simulation {
  Scene scene;
  LeadFieldPair leadfields;
  SensorDataset dataset;
};

/// Scene and lead fields depend only on scene_seed; sensor noise only on
/// noise_seed.
Simulation simulate(const ScenarioConfig& config, std::uint64_t scene_seed, std::uint64_t noise_seed);

}  // namespace pottsmix::synth
