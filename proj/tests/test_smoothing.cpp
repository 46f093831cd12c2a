#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "pottsmix/errors.hpp"
#include "pottsmix/smoothing.hpp"

using namespace pottsmix;
using smoothing::LoessOptions;

namespace {

// Direct weighted least squares at every index over the q nearest indices.
VectorXd naive_loess(const VectorXd& y, double span, int degree) {
  const int n = static_cast<int>(y.size());
  const int q = std::min(n, static_cast<int>(std::ceil(span * n - 1e-12)));
  VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(a - i) < std::abs(b - i); });
    idx.resize(q);
    double dmax = 0.0;
    for (int j : idx) dmax = std::max(dmax, std::abs(j - i) * 1.0);
    const double h = dmax + 1.0;
    MatrixXd xtwx = MatrixXd::Zero(degree + 1, degree + 1);
    VectorXd xtwy = VectorXd::Zero(degree + 1);
    for (int j : idx) {
      const double w = std::pow(1.0 - std::pow(std::abs(j - i) / h, 3), 3);
      VectorXd row(degree + 1);
      for (int c = 0; c <= degree; ++c) row[c] = std::pow(static_cast<double>(j - i), c);
      xtwx += w * row * row.transpose();
      xtwy += w * row * y[j];
    }
    out[i] = xtwx.fullPivLu().solve(xtwy)[0];
  }
  return out;
}

VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  return VectorXd::NullaryExpr(n, [&]() { return nd(rng); });
}

}  // namespace

TEST_CASE("constants and lines are reproduced") {
  const VectorXd c = VectorXd::Constant(30, 4.2);
  CHECK((smoothing::loess_smooth(c) - c).cwiseAbs().maxCoeff() < 1e-12);
  const VectorXd line = VectorXd::LinSpaced(30, -3.0, 11.0);
  for (int degree : {1, 2, 3}) {
    const LoessOptions o{0.5, degree};
    CHECK((smoothing::loess_smooth(line, o) - line).cwiseAbs().maxCoeff() < 1e-10);
  }
  VectorXd quad(25);
  for (int t = 0; t < 25; ++t) quad[t] = 0.3 * t * t - 2.0 * t + 1.0;
  CHECK((smoothing::loess_smooth(quad) - quad).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("full span with degree T-1 interpolates") {
  std::mt19937_64 rng(1);
  const VectorXd y = random_vector(6, rng);
  CHECK((smoothing::loess_smooth(y, {1.0, 5}) - y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("smoother is linear") {
  std::mt19937_64 rng(2);
  const VectorXd x = random_vector(40, rng), y = random_vector(40, rng);
  const VectorXd lhs = smoothing::loess_smooth(2.5 * x - 0.7 * y);
  const VectorXd rhs = 2.5 * smoothing::loess_smooth(x) - 0.7 * smoothing::loess_smooth(y);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matches direct weighted least squares") {
  std::mt19937_64 rng(3);
  for (int n : {7, 20, 61}) {
    for (double span : {0.3, 0.75, 1.0}) {
      for (int degree : {0, 1, 2}) {
        if (std::ceil(span * n - 1e-12) < degree + 1) continue;
        const VectorXd y = random_vector(n, rng);
        CAPTURE(n);
        CAPTURE(span);
        CAPTURE(degree);
        CHECK((smoothing::loess_smooth(y, {span, degree}) - naive_loess(y, span, degree)).cwiseAbs().maxCoeff() <
              1e-9);
      }
    }
  }
}

TEST_CASE("noisy bump: smoothing moves the series toward the truth") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  VectorXd bump(60);
  for (int t = 0; t < 60; ++t) bump[t] = 10.0 * std::exp(-(t - 30.0) * (t - 30.0) / (2.0 * 25.0));
  double raw = 0.0, smooth = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    VectorXd y = bump;
    for (int t = 0; t < 60; ++t) y[t] += nd(rng);
    raw += (y - bump).squaredNorm();
    smooth += (smoothing::loess_smooth(y, {0.3, 2}) - bump).squaredNorm();
  }
  CHECK(smooth < raw);
}

TEST_CASE("smooth_sources only touches the sources") {
  ModelState s;
  s.labels = Labeling(3, 2, 1);
  s.sources = MatrixXd::Zero(4, 12);
  s.mu_active = MatrixXd::Ones(1, 12);
  s.a_matrix = MatrixXd::Constant(1, 1, 0.3);
  s.alpha = VectorXd::Constant(2, 0.7);
  s.beta = 0.2;
  ModelState out = smoothing::smooth_sources(s);
  CHECK(out.sources.isZero());
  std::mt19937_64 rng(5);
  s.sources.row(1) = random_vector(12, rng).transpose();
  out = smoothing::smooth_sources(s);
  CHECK((out.sources.row(1).transpose() - smoothing::loess_smooth(s.sources.row(1).transpose())).norm() < 1e-12);
  out.sources = s.sources;
  CHECK(out == s);
}

TEST_CASE("window too small for the degree") {
  std::mt19937_64 rng(6);
  const VectorXd y = random_vector(10, rng);
  CHECK_THROWS_AS(smoothing::loess_smooth(y, {0.2, 2}), ParameterError);
  CHECK_THROWS_AS(smoothing::loess_smooth(y, {0.0, 1}), ParameterError);
  CHECK_THROWS_AS(smoothing::loess_smooth(y, {1.5, 1}), ParameterError);
  CHECK_THROWS_AS(smoothing::loess_smooth(y.head(2), {1.0, 2}), ParameterError);
}
