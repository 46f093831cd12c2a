#include "pottsmix/init.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "pottsmix/errors.hpp"
#include "pottsmix/potts.hpp"

namespace pottsmix::init {

MatrixXd ridge_initial_sources(const SensorDataset& dataset, const LeadFieldPair& leadfields, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("ridge lambda must be positive");
  const Eigen::Index nm = leadfields.x_meg.rows();
  const Eigen::Index ne = leadfields.x_eeg.rows();
  const Eigen::Index p = leadfields.x_meg.cols();
  if (dataset.meg.rows() != nm || dataset.eeg.rows() != ne)
    throw DegenerateInputError("lead-field rows do not match sensor counts");

  MatrixXd x(nm + ne, p);
  x << leadfields.x_meg, leadfields.x_eeg;
  MatrixXd y(nm + ne, dataset.meg.cols());
  y << dataset.meg, dataset.eeg;

  const Eigen::Index n = nm + ne;
  if (n < p) {
    // Dual form: s = X^T (X X^T + lambda I)^{-1} y.
    MatrixXd gram = x * x.transpose();
    gram.diagonal().array() += lambda;
    Eigen::LDLT<MatrixXd> ldlt(gram);
    return x.transpose() * ldlt.solve(y);
  }
  MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += lambda;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  return ldlt.solve(x.transpose() * y);
}

double default_ridge_lambda(const LeadFieldPair& leadfields) {
  const double tr = leadfields.x_meg.squaredNorm() + leadfields.x_eeg.squaredNorm();
  return 1e-2 * tr / static_cast<double>(leadfields.num_sources());
}

KMeansResult kmeans(const MatrixXd& points, int k, std::uint64_t seed, int max_iters) {
  const int n = static_cast<int>(points.rows());
  if (k < 1) throw ParameterError("kmeans needs k >= 1");
  if (k > n) throw ParameterError("kmeans k=" + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");

  KMeansResult res;
  res.centers.resize(k, points.cols());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  // Farthest-point seeding.
  VectorXd nearest(n);
  int first = pick(rng);
  res.centers.row(0) = points.row(first);
  for (int i = 0; i < n; ++i) nearest[i] = (points.row(i) - res.centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    res.centers.row(c) = points.row(far);
    for (int i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], (points.row(i) - res.centers.row(c)).squaredNorm());
  }

  res.assignments.assign(n, -1);
  VectorXd dist(n);
  std::vector<int> sizes(k);
  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it + 1;
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.row(i) - res.centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignments[i] != best) changed = true;
      res.assignments[i] = best;
      dist[i] = best_d;
    }

    std::fill(sizes.begin(), sizes.end(), 0);
    for (int a : res.assignments) ++sizes[a];
    bool reseeded = false;
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      // Move the worst-fitting point (among clusters that can spare one) into the empty cluster.
      int far = -1;
      for (int i = 0; i < n; ++i)
        if (sizes[res.assignments[i]] > 1 && (far < 0 || dist[i] > dist[far])) far = i;
      if (far < 0) break;
      --sizes[res.assignments[far]];
      res.assignments[far] = c;
      sizes[c] = 1;
      dist[far] = 0.0;
      reseeded = true;
    }

    res.centers.setZero();
    for (int i = 0; i < n; ++i) res.centers.row(res.assignments[i]) += points.row(i);
    for (int c = 0; c < k; ++c)
      if (sizes[c] > 0) res.centers.row(c) /= static_cast<double>(sizes[c]);

    if (!changed && !reseeded) break;
  }

  res.sse = 0.0;
  for (int i = 0; i < n; ++i) res.sse += (points.row(i) - res.centers.row(res.assignments[i])).squaredNorm();
  return res;
}

Geometry cluster_locations(const Geometry& geometry, int j, std::uint64_t seed) {
  const int p = geometry.num_locations();
  if (j < 1) throw ParameterError("cluster count J must be >= 1");
  if (j > p) throw ParameterError("cluster count J exceeds the number of locations");
  if (j == p) {
    std::vector<int> ids(p);
    std::iota(ids.begin(), ids.end(), 0);
    return geometry.with_clusters(std::move(ids));
  }
  MatrixXd coords(p, 3);
  for (int i = 0; i < p; ++i) coords.row(i) = geometry.location(i).transpose();
  KMeansResult km = kmeans(coords, j, seed);
  return geometry.with_clusters(std::move(km.assignments));
}

Labeling majority_vote(const Geometry& geometry, const std::vector<int>& location_labels, int k) {
  Labeling out(geometry.num_voxels(), k, 0);
  std::vector<int> votes(k);
  for (int v = 0; v < geometry.num_voxels(); ++v) {
    auto members = geometry.voxel_members(v);
    if (members.empty()) continue;
    std::fill(votes.begin(), votes.end(), 0);
    for (int j : members) ++votes[location_labels[j]];
    out.set(v, static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
  }
  return out;
}

InitialEstimate initial_estimate(const SensorDataset& dataset, const LeadFieldPair& leadfields,
                                 const Geometry& geometry, const Hyperparams& hyper, const InitOptions& options) {
  const int k = options.k;
  if (k < 2) throw ParameterError("K must be >= 2");
  hyper.validate();
  if (leadfields.num_sources() != geometry.num_locations())
    throw InvalidGeometryError("lead fields and geometry disagree on the number of locations");

  InitialEstimate est;
  const double lambda = options.ridge_lambda > 0.0 ? options.ridge_lambda : default_ridge_lambda(leadfields);
  est.ridge_sources = ridge_initial_sources(dataset, leadfields, lambda);
  const int p = static_cast<int>(est.ridge_sources.rows());
  const int t_len = static_cast<int>(est.ridge_sources.cols());
  if (k > p) throw InitializationError("K exceeds the number of locations");

  std::seed_seq seq{options.seed, std::uint64_t{0x9e3779b97f4a7c15ULL}};
  std::mt19937_64 rng(seq);
  const std::uint64_t kmeans_seed = rng();

  KMeansResult km = kmeans(est.ridge_sources, k, kmeans_seed);
  std::vector<int> sizes(k, 0);
  std::vector<double> power(k, 0.0);
  for (int j = 0; j < p; ++j) {
    ++sizes[km.assignments[j]];
    power[km.assignments[j]] += est.ridge_sources.row(j).squaredNorm();
  }
  for (int c = 0; c < k; ++c) {
    if (sizes[c] == 0) throw InitializationError("K-means group " + std::to_string(c) + " is empty");
    power[c] /= sizes[c];
  }

  // The lowest-power group anchors the inactive component; the rest keep their order.
  const int inactive = static_cast<int>(std::min_element(power.begin(), power.end()) - power.begin());
  std::vector<int> component_of_group(k);
  for (int c = 0, next = 1; c < k; ++c) component_of_group[c] = (c == inactive) ? 0 : next++;

  est.location_component.resize(p);
  for (int j = 0; j < p; ++j) est.location_component[j] = component_of_group[km.assignments[j]];

  ModelState& s = est.state;
  s.sources = cluster_average(est.ridge_sources, geometry);
  s.labels = majority_vote(geometry, est.location_component, k);
  s.mu_active = MatrixXd::Zero(k - 1, t_len);
  for (int c = 0; c < k; ++c) {
    const int comp = component_of_group[c];
    if (comp > 0) s.mu_active.row(comp - 1) = km.centers.row(c);
  }
  s.a_matrix = MatrixXd::Zero(k - 1, k - 1);
  s.sigma2_m = hyper.b_m / (hyper.a_m + 1.0);
  s.sigma2_e = hyper.b_e / (hyper.a_e + 1.0);
  s.sigma2_a = hyper.b_a / (hyper.a_a + 1.0);
  s.alpha = VectorXd::Constant(k, hyper.b_alpha / (hyper.a_alpha + 1.0));
  std::uniform_real_distribution<double> beta_prior(0.0, potts::beta_crit(k));
  s.beta = beta_prior(rng);
  return est;
}

ModelState initial_state(const SensorDataset& dataset, const LeadFieldPair& leadfields, const Geometry& geometry,
                         int k, const Hyperparams& hyper, std::uint64_t seed) {
  InitOptions opt;
  opt.k = k;
  opt.seed = seed;
  return initial_estimate(dataset, leadfields, geometry, hyper, opt).state;
}

}  // namespace pottsmix::init
