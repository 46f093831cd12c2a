#include "pottsmix/icm.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "pottsmix/errors.hpp"
#include "pottsmix/kernels.hpp"

namespace pottsmix::icm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Data and operator premultiplied by L^{-1}, where H = L L^T, so that
// r^T H^{-1} r becomes a plain squared norm.
struct Whitened {
  MatrixXd data;
  MatrixXd op;
  double log_det_h = 0.0;
};

Whitened whiten(const MatrixXd& h, const MatrixXd& data, const MatrixXd& op) {
  Whitened w;
  if (h.size() == 0 || h.isIdentity(0.0)) {
    w.data = data;
    w.op = op;
    return w;
  }
  Eigen::LLT<MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("noise covariance is not positive definite");
  auto l = llt.matrixL();
  w.data = l.solve(data);
  w.op = l.solve(op);
  w.log_det_h = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return w;
}

double log_inv_gamma(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

void check_operator(const ModelState& state, const LeadFieldPair& lf) {
  if (lf.x_meg.cols() != state.sources.rows() || lf.x_eeg.cols() != state.sources.rows())
    throw InvalidGeometryError("operator columns (" + std::to_string(lf.x_meg.cols()) +
                               ") do not match the number of source rows (" + std::to_string(state.sources.rows()) +
                               ")");
}

double sigma2_update(const MatrixXd& h, const MatrixXd& data, const MatrixXd& op, const MatrixXd& sources, double a,
                     double b) {
  Whitened w = whiten(h, data, op);
  const double q = (w.data - w.op * sources).squaredNorm();
  const double n = static_cast<double>(data.rows());
  const double t_len = static_cast<double>(data.cols());
  return (0.5 * q + b) / (a + 0.5 * t_len * n + 1.0);
}

// Location-level sums of the sources per component: rows are components.
struct ComponentSums {
  MatrixXd sum;             // K x T
  std::vector<double> count;  // K
};

ComponentSums component_sums(const ModelState& state, const Geometry& geometry) {
  ComponentSums cs;
  cs.sum = MatrixXd::Zero(state.k(), state.num_times());
  cs.count.assign(state.k(), 0.0);
  for (int j = 0; j < geometry.num_locations(); ++j) {
    const int l = state.labels[geometry.voxel_of(j)];
    cs.sum.row(l) += state.sources.row(geometry.cluster_of(j));
    cs.count[l] += 1.0;
  }
  return cs;
}

MatrixXd label_scores(const ModelState& state, const Geometry& geometry, bool parallel) {
  const MatrixXd means = kernels::full_means(state);
  kernels::MixtureView view{&geometry, &state.sources, &means, &state.alpha};
  return parallel ? kernels::omp::voxel_data_scores(view) : kernels::serial::voxel_data_scores(view);
}

void sweep(Labeling& labels, const MatrixXd& scores, double beta, const Geometry& geometry, Color color,
           bool parallel) {
  if (parallel) {
    kernels::omp::sweep_color(labels, scores, beta, geometry, color);
  } else {
    kernels::serial::sweep_color(labels, scores, beta, geometry, color);
  }
}

// Frobenius norm of the expanded (location-level) sources.
double expanded_norm(const MatrixXd& cluster_sources, const Geometry& geometry) {
  double acc = 0.0;
  for (int c = 0; c < geometry.num_clusters(); ++c)
    acc += static_cast<double>(geometry.cluster_members(c).size()) * cluster_sources.row(c).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  if (k < 2) throw ParameterError("K must be >= 2");
}

std::string_view block_name(Block b) {
  switch (b) {
    case Block::sigma2_m: return "sigma2_m";
    case Block::sigma2_e: return "sigma2_e";
    case Block::sigma2_a: return "sigma2_a";
    case Block::a_matrix: return "A";
    case Block::alpha: return "alpha";
    case Block::mu: return "mu";
    case Block::sources: return "sources";
    case Block::labels_black: return "labels_black";
    case Block::labels_white: return "labels_white";
    case Block::beta: return "beta";
  }
  return "?";
}

double update_sigma_m(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                      const Hyperparams& hyper) {
  check_operator(state, leadfields);
  return sigma2_update(leadfields.h_meg, dataset.meg, leadfields.x_meg, state.sources, hyper.a_m, hyper.b_m);
}

double update_sigma_e(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                      const Hyperparams& hyper) {
  check_operator(state, leadfields);
  return sigma2_update(leadfields.h_eeg, dataset.eeg, leadfields.x_eeg, state.sources, hyper.a_e, hyper.b_e);
}

double update_sigma_a(const ModelState& state, const Hyperparams& hyper) {
  const MatrixXd& mu = state.mu_active;
  const int t_len = static_cast<int>(mu.cols());
  if (t_len < 2) throw ParameterError("sigma2_a update needs T >= 2");
  double ss = 0.0;
  for (int t = 1; t < t_len; ++t) ss += (mu.col(t) - state.a_matrix * mu.col(t - 1)).squaredNorm();
  const double km1 = static_cast<double>(mu.rows());
  return (0.5 * ss + hyper.b_a) / (hyper.a_a + 0.5 * (t_len - 1) * km1 + 1.0);
}

MatrixXd update_a_matrix(const ModelState& state, const Hyperparams& hyper) {
  const MatrixXd& mu = state.mu_active;
  const int d = static_cast<int>(mu.rows());
  const int t_len = static_cast<int>(mu.cols());
  if (t_len < 2) throw ParameterError("A update needs T >= 2");

  // Kr_t = mu(t-1)^T (x) I, so sum Kr_t^T Kr_t = (sum mu(t-1) mu(t-1)^T) (x) I and
  // sum Kr_t^T mu(t) = vec(sum mu(t) mu(t-1)^T).
  MatrixXd lag_gram = MatrixXd::Zero(d, d);
  MatrixXd cross = MatrixXd::Zero(d, d);
  for (int t = 1; t < t_len; ++t) {
    lag_gram.noalias() += mu.col(t - 1) * mu.col(t - 1).transpose();
    cross.noalias() += mu.col(t) * mu.col(t - 1).transpose();
  }
  const int dd = d * d;
  MatrixXd c1 = MatrixXd::Identity(dd, dd) / hyper.sigma2_A;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int i = 0; i < d; ++i) c1(a * d + i, b * d + i) += lag_gram(a, b) / state.sigma2_a;
  const VectorXd rhs = Eigen::Map<const VectorXd>(cross.data(), dd) / state.sigma2_a;
  Eigen::LLT<MatrixXd> llt(c1);
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("A-update precision matrix is singular");
  const VectorXd vec_a = llt.solve(rhs);
  return Eigen::Map<const MatrixXd>(vec_a.data(), d, d);
}

VectorXd update_alpha(const ModelState& state, const Geometry& geometry, const Hyperparams& hyper) {
  const int k = state.k();
  const int t_len = state.num_times();
  VectorXd ss = VectorXd::Zero(k);
  VectorXd n = VectorXd::Zero(k);
  for (int j = 0; j < geometry.num_locations(); ++j) {
    const int l = state.labels[geometry.voxel_of(j)];
    const auto s = state.sources.row(geometry.cluster_of(j));
    if (l == 0) {
      ss[l] += s.squaredNorm();
    } else {
      ss[l] += (s - state.mu_active.row(l - 1)).squaredNorm();
    }
    n[l] += 1.0;
  }
  VectorXd alpha(k);
  for (int l = 0; l < k; ++l) alpha[l] = (0.5 * ss[l] + hyper.b_alpha) / (0.5 * t_len * n[l] + hyper.a_alpha + 1.0);
  return alpha;
}

MatrixXd update_mu(const ModelState& state, const Geometry& geometry, const Hyperparams& hyper) {
  const int k = state.k();
  const int d = k - 1;
  const int t_len = state.num_times();
  if (t_len < 2) throw ParameterError("mu update needs T >= 2");

  const ComponentSums cs = component_sums(state, geometry);
  VectorXd prec_data(d);
  for (int l = 1; l < k; ++l) prec_data[l - 1] = cs.count[l] / state.alpha[l];

  const MatrixXd& a = state.a_matrix;
  const MatrixXd ata = a.transpose() * a;
  const double inv_s2a = 1.0 / state.sigma2_a;
  const MatrixXd eye = MatrixXd::Identity(d, d);

  MatrixXd b_first = ata * inv_s2a + eye / hyper.sigma2_mu1;
  MatrixXd b_mid = (ata + eye) * inv_s2a;
  MatrixXd b_last = eye * inv_s2a;
  b_first.diagonal() += prec_data;
  b_mid.diagonal() += prec_data;
  b_last.diagonal() += prec_data;
  Eigen::LLT<MatrixXd> llt_first(b_first), llt_mid(b_mid), llt_last(b_last);

  MatrixXd mu = state.mu_active;
  VectorXd rhs(d);
  for (int t = 0; t < t_len; ++t) {
    for (int l = 1; l < k; ++l) rhs[l - 1] = cs.sum(l, t) / state.alpha[l];
    if (t == 0) {
      rhs += a.transpose() * mu.col(1) * inv_s2a;
      mu.col(t) = llt_first.solve(rhs);
    } else if (t == t_len - 1) {
      rhs += a * mu.col(t - 1) * inv_s2a;
      mu.col(t) = llt_last.solve(rhs);
    } else {
      rhs += (a.transpose() * mu.col(t + 1) + a * mu.col(t - 1)) * inv_s2a;
      mu.col(t) = llt_mid.solve(rhs);
    }
  }
  return mu;
}

MatrixXd update_sources(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                        const Geometry& geometry) {
  check_operator(state, leadfields);
  const int k = state.k();
  const int nc = geometry.num_clusters();
  if (state.sources.rows() != nc) throw InvalidGeometryError("sources do not match the cluster count");

  const Whitened wm = whiten(leadfields.h_meg, dataset.meg, leadfields.x_meg);
  const Whitened we = whiten(leadfields.h_eeg, dataset.eeg, leadfields.x_eeg);
  MatrixXd s = state.sources;
  MatrixXd res_m = wm.data - wm.op * s;
  MatrixXd res_e = we.data - we.op * s;
  const double inv_m = 1.0 / state.sigma2_m;
  const double inv_e = 1.0 / state.sigma2_e;
  const MatrixXd means = kernels::full_means(state);

  std::vector<int> members_per_label(k);
  Eigen::RowVectorXd rhs(state.num_times());
  for (int c = 0; c < nc; ++c) {
    std::fill(members_per_label.begin(), members_per_label.end(), 0);
    for (int j : geometry.cluster_members(c)) ++members_per_label[state.labels[geometry.voxel_of(j)]];

    double precision = wm.op.col(c).squaredNorm() * inv_m + we.op.col(c).squaredNorm() * inv_e;
    rhs.setZero();
    for (int l = 0; l < k; ++l) {
      if (members_per_label[l] == 0) continue;
      precision += members_per_label[l] / state.alpha[l];
      rhs += (members_per_label[l] / state.alpha[l]) * means.row(l);
    }
    if (!(precision > 0.0)) throw LinearAlgebraError("non-positive source precision for cluster " + std::to_string(c));

    res_m.noalias() += wm.op.col(c) * s.row(c);
    res_e.noalias() += we.op.col(c) * s.row(c);
    rhs.noalias() += inv_m * (wm.op.col(c).transpose() * res_m) + inv_e * (we.op.col(c).transpose() * res_e);
    s.row(c) = rhs / precision;
    res_m.noalias() -= wm.op.col(c) * s.row(c);
    res_e.noalias() -= we.op.col(c) * s.row(c);
  }
  return s;
}

void update_label_color(Labeling& labels, const ModelState& state, const Geometry& geometry, Color color,
                        bool parallel) {
  const MatrixXd scores = label_scores(state, geometry, parallel);
  sweep(labels, scores, state.beta, geometry, color, parallel);
}

Labeling update_labels(const ModelState& state, const Geometry& geometry, const potts::PottsContext& ctx,
                       bool parallel) {
  if (ctx.k != state.k()) throw InvalidLabelError("Potts context K does not match the state");
  const MatrixXd scores = label_scores(state, geometry, parallel);
  Labeling labels = state.labels;
  sweep(labels, scores, state.beta, geometry, Color::black, parallel);
  sweep(labels, scores, state.beta, geometry, Color::white, parallel);
  return labels;
}

double surrogate_log_posterior(const ModelState& state, const SensorDataset& dataset, const LeadFieldPair& leadfields,
                               const Geometry& geometry, const Hyperparams& hyper, const potts::PottsContext& ctx) {
  const LeadFieldPair collapsed = collapse_leadfield(leadfields, geometry);
  const int k = state.k();
  const int t_len = state.num_times();

  double total = 0.0;
  auto likelihood = [&](const MatrixXd& h, const MatrixXd& data, const MatrixXd& op, double sigma2) {
    const Whitened w = whiten(h, data, op);
    const double q = (w.data - w.op * state.sources).squaredNorm();
    const double n = static_cast<double>(data.rows());
    return -0.5 * t_len * n * (kLog2Pi + std::log(sigma2)) - 0.5 * t_len * w.log_det_h - 0.5 * q / sigma2;
  };
  total += likelihood(collapsed.h_meg, dataset.meg, collapsed.x_meg, state.sigma2_m);
  total += likelihood(collapsed.h_eeg, dataset.eeg, collapsed.x_eeg, state.sigma2_e);
  total += log_inv_gamma(state.sigma2_m, hyper.a_m, hyper.b_m);
  total += log_inv_gamma(state.sigma2_e, hyper.a_e, hyper.b_e);

  // Gaussian mixture over all locations.
  for (int j = 0; j < geometry.num_locations(); ++j) {
    const int l = state.labels[geometry.voxel_of(j)];
    const auto s = state.sources.row(geometry.cluster_of(j));
    const double ss = (l == 0) ? s.squaredNorm() : (s - state.mu_active.row(l - 1)).squaredNorm();
    total += -0.5 * t_len * (kLog2Pi + std::log(state.alpha[l])) - 0.5 * ss / state.alpha[l];
  }

  // VAR(1) dynamics of the active means.
  const MatrixXd& mu = state.mu_active;
  const double d = static_cast<double>(k - 1);
  for (int t = 1; t < t_len; ++t) {
    total += -0.5 * d * (kLog2Pi + std::log(state.sigma2_a)) -
             0.5 * (mu.col(t) - state.a_matrix * mu.col(t - 1)).squaredNorm() / state.sigma2_a;
  }
  total += -0.5 * d * (kLog2Pi + std::log(hyper.sigma2_mu1)) - 0.5 * mu.col(0).squaredNorm() / hyper.sigma2_mu1;

  total += potts::log_pseudolikelihood(state.labels, state.beta, ctx);
  for (int l = 0; l < k; ++l) total += log_inv_gamma(state.alpha[l], hyper.a_alpha, hyper.b_alpha);

  const double upper = potts::beta_crit(k);
  if (state.beta < 0.0 || state.beta > upper) return -INFINITY;
  total -= std::log(upper);

  total += -0.5 * d * d * (kLog2Pi + std::log(hyper.sigma2_A)) - 0.5 * state.a_matrix.squaredNorm() / hyper.sigma2_A;
  total += log_inv_gamma(state.sigma2_a, hyper.a_a, hyper.b_a);
  return total;
}

int estimate_k(const Labeling& labels) {
  int occupied = 0;
  for (int c : labels.counts()) occupied += (c > 0);
  return occupied;
}

FitResult fit(const SensorDataset& dataset, const LeadFieldPair& leadfields, const Geometry& geometry,
              const Hyperparams& hyper, const SolverConfig& config, ModelState initial,
              const BlockObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  hyper.validate();
  initial.validate();
  if (initial.k() != config.k) throw ParameterError("initial state K does not match the solver config");
  if (initial.labels.num_voxels() != geometry.num_voxels())
    throw InvalidGeometryError("labeling does not match the voxel grid");

  const LeadFieldPair collapsed = collapse_leadfield(leadfields, geometry);
  const potts::PottsContext ctx(geometry, config.k);

  FitResult out;
  ModelState& s = out.state;
  s = std::move(initial);
  FitReport& rep = out.report;

  auto notify = [&](Block b, int it) {
    if (observer) observer(b, it, s);
  };

  for (int it = 1; it <= config.max_iters; ++it) {
    const MatrixXd previous = s.sources;

    s.sigma2_m = update_sigma_m(s, dataset, collapsed, hyper);
    notify(Block::sigma2_m, it);
    s.sigma2_e = update_sigma_e(s, dataset, collapsed, hyper);
    notify(Block::sigma2_e, it);
    s.sigma2_a = update_sigma_a(s, hyper);
    notify(Block::sigma2_a, it);
    s.a_matrix = update_a_matrix(s, hyper);
    notify(Block::a_matrix, it);
    s.alpha = update_alpha(s, geometry, hyper);
    notify(Block::alpha, it);
    s.mu_active = update_mu(s, geometry, hyper);
    notify(Block::mu, it);
    s.sources = update_sources(s, dataset, collapsed, geometry);
    notify(Block::sources, it);

    const MatrixXd scores = label_scores(s, geometry, config.parallel_labels);
    sweep(s.labels, scores, s.beta, geometry, Color::black, config.parallel_labels);
    notify(Block::labels_black, it);
    sweep(s.labels, scores, s.beta, geometry, Color::white, config.parallel_labels);
    notify(Block::labels_white, it);

    s.beta = potts::maximize_beta(s.labels, ctx);
    notify(Block::beta, it);

    rep.iterations = it;
    if (config.track_objective) {
      const double obj = surrogate_log_posterior(s, dataset, leadfields, geometry, hyper, ctx);
      if (!std::isfinite(obj)) throw NumericalFailureError("non-finite surrogate log posterior", it);
      rep.objective_trace.push_back(obj);
    } else if (!s.sources.allFinite()) {
      throw NumericalFailureError("non-finite source estimates", it);
    }

    const double base = expanded_norm(previous, geometry);
    const double change = expanded_norm(s.sources - previous, geometry);
    const double rel = base > 0.0 ? change / base : change;
    if (rel < config.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.k_hat = estimate_k(s.labels);
  const MatrixXd expanded = expand_sources(s, geometry);
  rep.power_map = expanded.rowwise().squaredNorm();
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace pottsmix::icm
