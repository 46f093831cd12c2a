#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "pottsmix/model.hpp"

namespace oracle {

namespace {

const double kPi = std::acos(-1.0);

// log N(x; m, C) with a dense covariance.
double log_mvn(const VectorXd& x, const VectorXd& m, const MatrixXd& cov) {
  Eigen::PartialPivLU<MatrixXd> lu(cov);
  const VectorXd r = x - m;
  const double quad = r.dot(lu.solve(r));
  const double logdet = std::log(lu.determinant());
  return -0.5 * (x.size() * std::log(2.0 * kPi) + logdet + quad);
}

double log_normal(double x, double m, double var) {
  return -0.5 * std::log(2.0 * kPi * var) - 0.5 * (x - m) * (x - m) / var;
}

double log_ig(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double full_mean(const ModelState& s, int l, int t) { return l == 0 ? 0.0 : s.mu_active(l - 1, t); }

}  // namespace

double beta_crit(int k) {
  return 2.0 / 3.0 * std::log((std::sqrt(2.0) + std::sqrt(4.0 * k - 2.0)) / 2.0);
}

double pseudolikelihood(const Geometry& g, const std::vector<int>& labels, int k, double beta) {
  auto z = [&](int v, int q) { return labels[v] == q ? 1.0 : 0.0; };
  double total = 0.0;
  for (int i = 0; i < g.num_voxels(); ++i) {
    double own = 0.0;
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int l : g.neighbors(i)) s += z(l, j);
      own += z(i, j) * s;
    }
    double norm = 0.0;
    for (int q = 0; q < k; ++q) {
      double s = 0.0;
      for (int l : g.neighbors(i)) s += z(l, q);
      norm += std::exp(2.0 * beta * s);
    }
    total += 2.0 * beta * own - std::log(norm);
  }
  return total;
}

double log_joint(const ModelState& s, const SensorDataset& d, const LeadFieldPair& lf, const Geometry& g,
                 const Hyperparams& h) {
  const int p = g.num_locations();
  const int t_len = static_cast<int>(s.sources.cols());
  const int k = s.labels.k();

  MatrixXd full(p, t_len);
  for (int j = 0; j < p; ++j) full.row(j) = s.sources.row(g.cluster_of(j));

  double total = 0.0;
  const MatrixXd cov_m = s.sigma2_m * lf.h_meg;
  const MatrixXd cov_e = s.sigma2_e * lf.h_eeg;
  for (int t = 0; t < t_len; ++t) {
    total += log_mvn(d.meg.col(t), lf.x_meg * full.col(t), cov_m);
    total += log_mvn(d.eeg.col(t), lf.x_eeg * full.col(t), cov_e);
  }

  for (int j = 0; j < p; ++j) {
    const int l = s.labels[g.voxel_of(j)];
    for (int t = 0; t < t_len; ++t) total += log_normal(full(j, t), full_mean(s, l, t), s.alpha[l]);
  }

  const int dim = k - 1;
  const MatrixXd eye = MatrixXd::Identity(dim, dim);
  total += log_mvn(s.mu_active.col(0), VectorXd::Zero(dim), h.sigma2_mu1 * eye);
  for (int t = 1; t < t_len; ++t)
    total += log_mvn(s.mu_active.col(t), s.a_matrix * s.mu_active.col(t - 1), s.sigma2_a * eye);

  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) total += log_normal(s.a_matrix(a, b), 0.0, h.sigma2_A);

  total += log_ig(s.sigma2_m, h.a_m, h.b_m);
  total += log_ig(s.sigma2_e, h.a_e, h.b_e);
  total += log_ig(s.sigma2_a, h.a_a, h.b_a);
  for (int l = 0; l < k; ++l) total += log_ig(s.alpha[l], h.a_alpha, h.b_alpha);

  total += pseudolikelihood(g, s.labels.values(), k, s.beta);
  total -= std::log(beta_crit(k));
  return total;
}

double argmax_positive(const std::function<double(double)>& f, double lo, double hi) {
  auto neg = [&](double u) { return -f(std::exp(u)); };
  const auto r = boost::math::tools::brent_find_minima(neg, std::log(lo), std::log(hi),
                                                       std::numeric_limits<double>::digits);
  // Brent stops near sqrt(eps) relative; a few central-difference Newton
  // steps in log x bring the estimate down to roundoff.
  double u = r.first;
  const double h = 1e-4;
  for (int step = 0; step < 3; ++step) {
    const double fp = neg(u + h), f0 = neg(u), fm = neg(u - h);
    const double g = (fp - fm) / (2.0 * h);
    const double c = (fp - 2.0 * f0 + fm) / (h * h);
    if (!(c > 0.0)) break;
    // Near the optimum the value barely moves, so the step is trusted on
    // curvature alone rather than on a roundoff-level decrease.
    if (std::abs(g / c) > 0.1) break;
    u -= g / c;
  }
  return std::exp(u);
}

VectorXd argmax_newton(const std::function<double(const VectorXd&)>& f, VectorXd x, int max_steps) {
  const int n = static_cast<int>(x.size());
  for (int step = 0; step < max_steps; ++step) {
    // Wide steps: central differences are exact for quadratics at any width,
    // and a wide step keeps cancellation error small.
    const double hstep = 0.5;
    VectorXd grad(n);
    MatrixXd hess(n, n);
    const double f0 = f(x);
    for (int i = 0; i < n; ++i) {
      VectorXd xp = x, xm = x;
      xp[i] += hstep;
      xm[i] -= hstep;
      const double fp = f(xp), fm = f(xm);
      grad[i] = (fp - fm) / (2.0 * hstep);
      hess(i, i) = (fp - 2.0 * f0 + fm) / (hstep * hstep);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        VectorXd a = x, b = x, c = x, e = x;
        a[i] += hstep, a[j] += hstep;
        b[i] += hstep, b[j] -= hstep;
        c[i] -= hstep, c[j] += hstep;
        e[i] -= hstep, e[j] -= hstep;
        hess(i, j) = hess(j, i) = (f(a) - f(b) - f(c) + f(e)) / (4.0 * hstep * hstep);
      }
    const VectorXd delta = hess.fullPivLu().solve(-grad);
    x += delta;
    if (delta.norm() < 1e-12 * (1.0 + x.norm())) break;
  }
  return x;
}

MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ev(0.5, 2.0);
  MatrixXd q = MatrixXd::NullaryExpr(n, n, [&]() { return nd(rng); });
  Eigen::HouseholderQR<MatrixXd> qr(q);
  const MatrixXd orth = qr.householderQ();
  VectorXd lambda(n);
  for (int i = 0; i < n; ++i) lambda[i] = ev(rng);
  return orth * lambda.asDiagonal() * orth.transpose();
}

Tiny make_tiny(std::uint64_t seed, int p, int t, int k) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto pos = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };

  Tiny out;
  std::vector<pottsmix::Point3> locs(p);
  for (auto& x : locs) x = pottsmix::Point3(unif(rng), unif(rng), unif(rng));
  pottsmix::Geometry g = pottsmix::Geometry::build(locs, {2, 2, 1});

  // Random partition into j clusters, every cluster non-empty.
  const int j = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(p - 1));
  std::vector<int> cl(p);
  std::iota(cl.begin(), cl.end(), 0);
  for (int i = j; i < p; ++i) cl[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(j));
  std::shuffle(cl.begin(), cl.end(), rng);
  out.geometry = g.with_clusters(cl);

  const int nm = 4, ne = 3;
  out.leadfields.x_meg = MatrixXd::NullaryExpr(nm, p, [&]() { return nd(rng); });
  out.leadfields.x_eeg = MatrixXd::NullaryExpr(ne, p, [&]() { return nd(rng); });
  out.leadfields.h_meg = random_spd(nm, rng);
  out.leadfields.h_eeg = random_spd(ne, rng);
  out.collapsed = pottsmix::collapse_leadfield(out.leadfields, out.geometry);

  out.dataset.meg = MatrixXd::NullaryExpr(nm, t, [&]() { return nd(rng); });
  out.dataset.eeg = MatrixXd::NullaryExpr(ne, t, [&]() { return nd(rng); });
  out.dataset.sample_times = VectorXd::LinSpaced(t, 0.0, t - 1.0);
  out.dataset.standardized = true;

  Hyperparams& h = out.hyper;
  h.a_m = pos(0.5, 2), h.b_m = pos(0.5, 2);
  h.a_e = pos(0.5, 2), h.b_e = pos(0.5, 2);
  h.a_a = pos(0.5, 2), h.b_a = pos(0.5, 2);
  h.a_alpha = pos(0.5, 2), h.b_alpha = pos(0.5, 2);
  h.sigma2_A = pos(1, 5), h.sigma2_mu1 = pos(1, 5);

  ModelState& s = out.state;
  std::vector<int> labels(out.geometry.num_voxels());
  for (int& l : labels) l = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
  s.labels = pottsmix::Labeling(labels, k);
  s.sources = MatrixXd::NullaryExpr(out.geometry.num_clusters(), t, [&]() { return nd(rng); });
  s.mu_active = MatrixXd::NullaryExpr(k - 1, t, [&]() { return nd(rng); });
  s.a_matrix = MatrixXd::NullaryExpr(k - 1, k - 1, [&]() { return 0.5 * nd(rng); });
  s.sigma2_a = pos(0.5, 2);
  s.sigma2_m = pos(0.5, 2);
  s.sigma2_e = pos(0.5, 2);
  s.alpha.resize(k);
  for (int l = 0; l < k; ++l) s.alpha[l] = pos(0.5, 2);
  s.beta = pos(0.0, beta_crit(k));
  return out;
}

}  // namespace oracle
