#include "mode_check.hpp"

#include <algorithm>
#include <cmath>

#include "pottsmix/icm.hpp"

namespace oracle {

double ModeGaps::max() const {
  return std::max({sigma2_m, sigma2_e, sigma2_a, a_matrix, alpha, mu, sources});
}

ModeGaps check_modes(const Tiny& tiny) {
  using namespace pottsmix;
  const Geometry& g = tiny.geometry;
  const Hyperparams& h = tiny.hyper;
  ModeGaps gaps;
  auto joint = [&](const ModelState& s) { return log_joint(s, tiny.dataset, tiny.leadfields, g, h); };

  {
    ModelState s = tiny.state;
    const double closed = icm::update_sigma_m(s, tiny.dataset, tiny.collapsed, h);
    const double numeric = argmax_positive([&](double x) {
      s.sigma2_m = x;
      return joint(s);
    });
    gaps.sigma2_m = std::abs(closed - numeric);
  }
  {
    ModelState s = tiny.state;
    const double closed = icm::update_sigma_e(s, tiny.dataset, tiny.collapsed, h);
    const double numeric = argmax_positive([&](double x) {
      s.sigma2_e = x;
      return joint(s);
    });
    gaps.sigma2_e = std::abs(closed - numeric);
  }
  {
    ModelState s = tiny.state;
    const double closed = icm::update_sigma_a(s, h);
    const double numeric = argmax_positive([&](double x) {
      s.sigma2_a = x;
      return joint(s);
    });
    gaps.sigma2_a = std::abs(closed - numeric);
  }
  {
    ModelState s = tiny.state;
    const MatrixXd closed = icm::update_a_matrix(s, h);
    const int d = static_cast<int>(s.a_matrix.rows());
    const VectorXd x0 = VectorXd::Zero(d * d);
    const VectorXd numeric = argmax_newton(
        [&](const VectorXd& v) {
          s.a_matrix = Eigen::Map<const MatrixXd>(v.data(), d, d);
          return joint(s);
        },
        x0);
    gaps.a_matrix = (closed - Eigen::Map<const MatrixXd>(numeric.data(), d, d)).cwiseAbs().maxCoeff();
  }
  {
    ModelState s = tiny.state;
    const VectorXd closed = icm::update_alpha(s, g, h);
    for (int l = 0; l < s.k(); ++l) {
      ModelState c = tiny.state;
      const double numeric = argmax_positive([&](double x) {
        c.alpha[l] = x;
        return joint(c);
      });
      gaps.alpha = std::max(gaps.alpha, std::abs(closed[l] - numeric));
    }
  }
  {
    // Coordinate ascent over t in order, each step using the latest columns.
    ModelState s = tiny.state;
    const MatrixXd closed = icm::update_mu(s, g, h);
    for (int t = 0; t < s.num_times(); ++t) {
      const VectorXd numeric = argmax_newton(
          [&](const VectorXd& v) {
            s.mu_active.col(t) = v;
            return joint(s);
          },
          VectorXd::Zero(s.k() - 1));
      s.mu_active.col(t) = numeric;
    }
    gaps.mu = (closed - s.mu_active).cwiseAbs().maxCoeff();
  }
  {
    // Gauss-Seidel over clusters in index order.
    ModelState s = tiny.state;
    const MatrixXd closed = icm::update_sources(s, tiny.dataset, tiny.collapsed, g);
    for (int c = 0; c < g.num_clusters(); ++c) {
      const VectorXd numeric = argmax_newton(
          [&](const VectorXd& v) {
            s.sources.row(c) = v.transpose();
            return joint(s);
          },
          VectorXd::Zero(s.num_times()));
      s.sources.row(c) = numeric.transpose();
    }
    gaps.sources = (closed - s.sources).cwiseAbs().maxCoeff();
  }
  return gaps;
}

}  // namespace oracle
