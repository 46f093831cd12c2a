#include "pottsmix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <string>

#include "pottsmix/errors.hpp"
#include "pottsmix/init.hpp"

namespace pottsmix::synth {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{seed, tag};
  std::mt19937_64 rng(seq);
  return rng();
}

enum SeedTag : std::uint64_t { kGeometry = 1, kLeadField = 2, kRegions = 3, kNoise = 4 };

}  // namespace

Geometry make_geometry(int p, GridDims dims, std::uint64_t seed) {
  if (p < 1) throw ParameterError("number of locations must be >= 1");
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw ParameterError("grid dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> radius(0.95, 1.05);
  std::vector<Point3> pts(p);
  for (auto& pt : pts) {
    Point3 d;
    do {
      d = Point3(normal(rng), normal(rng), normal(rng));
    } while (d.norm() < 1e-12);
    pt = d.normalized() * radius(rng);
  }
  return Geometry::build(std::move(pts), dims);
}

LeadFieldPair make_leadfield(const Geometry& geometry, int n_meg, int n_eeg, double smoothness, std::uint64_t seed) {
  if (n_meg < 1 || n_eeg < 1) throw ParameterError("sensor counts must be >= 1");
  if (!(smoothness > 0.0)) throw ParameterError("lead-field smoothness must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / smoothness);
  std::uniform_real_distribution<double> offset(0.0, 2.0 * std::numbers::pi);
  const int p = geometry.num_locations();
  auto draw = [&](int n) {
    MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
      const Point3 w(normal(rng), normal(rng), normal(rng));
      const double b = offset(rng);
      for (int j = 0; j < p; ++j) x(i, j) = std::numbers::sqrt2 * std::cos(w.dot(geometry.location(j)) + b);
    }
    return x;
  };
  MatrixXd xm = draw(n_meg);
  MatrixXd xe = draw(n_eeg);
  return LeadFieldPair::with_identity_noise(std::move(xm), std::move(xe));
}

std::vector<std::vector<int>> location_adjacency(const Geometry& geometry, int k) {
  const int p = geometry.num_locations();
  std::vector<std::vector<int>> adj(p);
  const int kk = std::min(k, p - 1);
  std::vector<std::pair<double, int>> dist;
  for (int i = 0; i < p; ++i) {
    dist.clear();
    for (int j = 0; j < p; ++j)
      if (j != i) dist.emplace_back((geometry.location(i) - geometry.location(j)).squaredNorm(), j);
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    for (int r = 0; r < kk; ++r) {
      adj[i].push_back(dist[r].second);
      adj[dist[r].second].push_back(i);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

std::vector<int> grow_patches(const Geometry& geometry, const std::vector<int>& sizes, std::uint64_t seed) {
  const int p = geometry.num_locations();
  long total = 0;
  for (int s : sizes) {
    if (s < 1) throw ParameterError("region sizes must be >= 1");
    total += s;
  }
  if (total > p) throw ParameterError("regions need " + std::to_string(total) + " locations but only " +
                                      std::to_string(p) + " exist");
  std::vector<int> patch(p, -1);
  if (sizes.empty()) return patch;

  const auto adj = location_adjacency(geometry);
  std::mt19937_64 rng(seed);
  using Entry = std::pair<double, int>;
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::fill(patch.begin(), patch.end(), -1);
    bool ok = true;
    for (std::size_t r = 0; r < sizes.size() && ok; ++r) {
      std::vector<int> free;
      for (int j = 0; j < p; ++j)
        if (patch[j] < 0) free.push_back(j);
      const int start = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
      const Point3 centre = geometry.location(start);
      std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
      std::vector<char> queued(p, 0);
      frontier.emplace(0.0, start);
      queued[start] = 1;
      int grown = 0;
      while (grown < sizes[r] && !frontier.empty()) {
        const int j = frontier.top().second;
        frontier.pop();
        patch[j] = static_cast<int>(r);
        ++grown;
        for (int u : adj[j]) {
          if (patch[u] >= 0 || queued[u]) continue;
          queued[u] = 1;
          frontier.emplace((geometry.location(u) - centre).squaredNorm(), u);
        }
      }
      ok = grown == sizes[r];
    }
    if (ok) return patch;
  }
  throw GenerationError("could not grow disjoint connected regions after 100 restarts");
}

Labeling make_regions(const Geometry& geometry, int n_active, int region_size, std::uint64_t seed) {
  if (n_active < 0) throw ParameterError("n_active must be >= 0");
  std::vector<int> patch = grow_patches(geometry, std::vector<int>(n_active, region_size), seed);
  for (int& v : patch) v += 1;
  return init::majority_vote(geometry, patch, n_active + 1 < 2 ? 2 : n_active + 1);
}

VectorXd make_signal(const SignalSpec& spec, int num_times) {
  if (num_times < 1) throw ParameterError("signal length must be >= 1");
  VectorXd s(num_times);
  switch (spec.kind) {
    case SignalKind::gaussian_bump:
      if (!(spec.width > 0.0)) throw ParameterError("bump width must be positive");
      for (int t = 0; t < num_times; ++t) {
        const double d = t - spec.peak;
        s[t] = spec.amplitude * std::exp(-d * d / (2.0 * spec.width * spec.width));
      }
      break;
    case SignalKind::sinusoid:
      if (!(spec.frequency > 0.0)) throw ParameterError("sinusoid frequency must be positive");
      for (int t = 0; t < num_times; ++t)
        s[t] = spec.amplitude * std::sin(2.0 * std::numbers::pi * spec.frequency * t + spec.phase);
      break;
  }
  return s;
}

SensorDataset generate_dataset(const Scene& scene, const LeadFieldPair& leadfields, double noise_fraction,
                               std::uint64_t seed) {
  if (!(noise_fraction >= 0.0)) throw ParameterError("noise fraction must be >= 0");
  if (leadfields.num_sources() != scene.true_sources.rows())
    throw InvalidGeometryError("lead fields do not match the scene's location count");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto observe = [&](const MatrixXd& x) {
    MatrixXd y = x * scene.true_sources;
    const double t_len = static_cast<double>(y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double mean = y.row(i).sum() / t_len;
      const double var = (y.row(i).array() - mean).square().sum() / t_len;
      const double sd = std::sqrt(noise_fraction * var);
      for (Eigen::Index t = 0; t < y.cols(); ++t) y(i, t) += sd * normal(rng);
    }
    return y;
  };
  SensorDataset d;
  d.meg = observe(leadfields.x_meg);
  d.eeg = observe(leadfields.x_eeg);
  d.sample_times = VectorXd::LinSpaced(d.meg.cols(), 0.0, static_cast<double>(d.meg.cols() - 1));
  return d;
}

void ScenarioConfig::validate() const {
  if (num_locations < 1) throw ParameterError("num_locations must be >= 1");
  if (n_meg < 1 || n_eeg < 1) throw ParameterError("sensor counts must be >= 1");
  if (num_times < 2) throw ParameterError("num_times must be >= 2");
  if (!(smoothness > 0.0)) throw ParameterError("smoothness must be positive");
  if (!(noise_fraction >= 0.0)) throw ParameterError("noise_fraction must be >= 0");
  if (region_sizes.size() != region_components.size())
    throw ParameterError("region_sizes and region_components differ in length");
  for (int c : region_components)
    if (c < 1 || c > static_cast<int>(signals.size()))
      throw ParameterError("region component " + std::to_string(c) + " has no signal");
}

namespace {

// Bumps peaking at evenly spaced times. Less-separated variants halve both
// the peak spacing and the amplitude.
std::vector<SignalSpec> bumps(int m, int t_len, bool less_separated) {
  std::vector<SignalSpec> out(m);
  const double spacing = static_cast<double>(t_len) / (m + 1) * (less_separated ? 0.5 : 1.0);
  for (int c = 0; c < m; ++c) {
    out[c].kind = SignalKind::gaussian_bump;
    out[c].amplitude = less_separated ? 5.0 : 10.0;
    out[c].peak = 0.5 * t_len + (c - 0.5 * (m - 1)) * spacing;
    out[c].width = t_len / 12.0;
  }
  return out;
}

}  // namespace

ScenarioConfig preset(const std::string& name, int num_locations, int num_times) {
  if (num_locations < 1 || num_times < 2) throw ParameterError("preset needs num_locations >= 1 and num_times >= 2");
  const std::string suffix = "-less-separated";
  const bool less = name.size() > suffix.size() && name.ends_with(suffix);
  const std::string base = less ? name.substr(0, name.size() - suffix.size()) : name;

  ScenarioConfig c;
  c.name = name;
  c.num_locations = num_locations;
  c.num_times = num_times;
  const int t_len = c.num_times;
  if (base == "two-state") {
    c.region_sizes = {60, 40};
    c.region_components = {1, 1};
    c.signals = bumps(1, t_len, less);
  } else if (base == "three-state") {
    c.region_sizes = {60, 40};
    c.region_components = {1, 2};
    c.signals = bumps(2, t_len, less);
  } else if (base == "four-state" || base == "four-state-sinusoid") {
    c.region_sizes = {60, 40, 40};
    c.region_components = {1, 2, 3};
    c.signals = bumps(3, t_len, less);
    if (base == "four-state-sinusoid") {
      SignalSpec& s = c.signals[2];
      s.kind = SignalKind::sinusoid;
      s.frequency = 2.0 / t_len;
      s.phase = 0.0;
    }
  } else if (base == "nine-state") {
    c.region_sizes = std::vector<int>(8, 30);
    c.region_components = {1, 2, 3, 4, 5, 6, 7, 8};
    c.signals = bumps(8, t_len, less);
  } else {
    throw ParameterError("unknown scenario preset '" + name + "'");
  }
  for (int& size : c.region_sizes)
    size = std::max(1, static_cast<int>(std::lround(size * static_cast<double>(num_locations) / 1000.0)));
  return c;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const char* base : {"two-state", "three-state", "four-state", "four-state-sinusoid", "nine-state"}) {
    out.emplace_back(base);
    out.emplace_back(std::string(base) + "-less-separated");
  }
  return out;
}

Scene make_scene(const ScenarioConfig& config, std::uint64_t scene_seed) {
  config.validate();
  Scene scene;
  scene.geometry = make_geometry(config.num_locations, config.grid, derive_seed(scene_seed, kGeometry));
  const std::vector<int> patch = grow_patches(scene.geometry, config.region_sizes, derive_seed(scene_seed, kRegions));
  std::vector<int> component(patch.size(), 0);
  for (std::size_t j = 0; j < patch.size(); ++j)
    if (patch[j] >= 0) component[j] = config.region_components[patch[j]];

  const int k = config.true_k();
  scene.true_labels = init::majority_vote(scene.geometry, component, std::max(k, 2));
  scene.signals = MatrixXd::Zero(std::max(k, 2), config.num_times);
  for (int c = 1; c < k; ++c) scene.signals.row(c) = make_signal(config.signals[c - 1], config.num_times).transpose();
  scene.true_sources.resize(scene.geometry.num_locations(), config.num_times);
  for (int j = 0; j < scene.geometry.num_locations(); ++j)
    scene.true_sources.row(j) = scene.signals.row(scene.true_labels[scene.geometry.voxel_of(j)]);
  return scene;
}

Simulation simulate(const ScenarioConfig& config, std::uint64_t scene_seed, std::uint64_t noise_seed) {
  Simulation sim;
  sim.scene = make_scene(config, scene_seed);
  sim.leadfields = make_leadfield(sim.scene.geometry, config.n_meg, config.n_eeg, config.smoothness,
                                  derive_seed(scene_seed, kLeadField));
  sim.dataset = generate_dataset(sim.scene, sim.leadfields, config.noise_fraction, derive_seed(noise_seed, kNoise));
  return sim;
}

}  // namespace pottsmix::synth
