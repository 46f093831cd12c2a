#include "pottsmix/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pottsmix/errors.hpp"

namespace pottsmix::smoothing {

namespace {

int window_size(int t_len, const LoessOptions& o) {
  return std::min(t_len, static_cast<int>(std::ceil(o.span * t_len - 1e-12)));
}

// Linear smoother matrix: row i holds the weights mapping the series to the
// fitted value at index i. Fits are centred on i and scaled by h for
// conditioning.
MatrixXd smoother_matrix(int t_len, const LoessOptions& o) {
  const int q = window_size(t_len, o);
  if (q < o.degree + 1)
    throw ParameterError("loess window of " + std::to_string(q) + " points is smaller than degree + 1 = " +
                         std::to_string(o.degree + 1));
  MatrixXd l = MatrixXd::Zero(t_len, t_len);
  MatrixXd design(q, o.degree + 1);
  VectorXd sqrt_w(q);
  for (int i = 0; i < t_len; ++i) {
    // The q nearest indices form a contiguous block; ties go to the left.
    int lo = std::clamp(i - (q - 1) / 2, 0, t_len - q);
    while (lo > 0 && i - (lo - 1) <= (lo + q - 1) - i) --lo;
    while (lo + q < t_len && (lo + q) - i < i - lo) ++lo;
    const double h = std::max(i - lo, lo + q - 1 - i) + 1.0;
    for (int r = 0; r < q; ++r) {
      const double d = (lo + r - i) / h;
      const double u = 1.0 - std::pow(std::abs(d), 3);
      sqrt_w[r] = std::sqrt(u * u * u);
      double p = 1.0;
      for (int c = 0; c <= o.degree; ++c, p *= d) design(r, c) = p;
    }
    const MatrixXd wd = sqrt_w.asDiagonal() * design;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(wd);
    if (qr.rank() < o.degree + 1) throw ParameterError("loess design is rank deficient");
    // Fitted value at d = 0 is the intercept: e_0^T (WD)^+ W^{1/2}.
    const MatrixXd pinv = qr.solve(MatrixXd::Identity(q, q));
    l.block(i, lo, 1, q) = (pinv.row(0).array() * sqrt_w.transpose().array()).matrix();
  }
  return l;
}

}  // namespace

void LoessOptions::validate() const {
  if (!(span > 0.0 && span <= 1.0)) throw ParameterError("loess span must lie in (0, 1]");
  if (degree < 0) throw ParameterError("loess degree must be >= 0");
}

VectorXd loess_smooth(const VectorXd& series, const LoessOptions& options) {
  options.validate();
  const int t_len = static_cast<int>(series.size());
  if (t_len < options.degree + 1) throw ParameterError("series shorter than degree + 1");
  return smoother_matrix(t_len, options) * series;
}

MatrixXd smooth_rows(const MatrixXd& sources, const LoessOptions& options) {
  options.validate();
  const int t_len = static_cast<int>(sources.cols());
  if (t_len < options.degree + 1) throw ParameterError("series shorter than degree + 1");
  const MatrixXd l = smoother_matrix(t_len, options);
  return sources * l.transpose();
}

ModelState smooth_sources(const ModelState& state, const LoessOptions& options) {
  ModelState out = state;
  out.sources = smooth_rows(state.sources, options);
  return out;
}

}  // namespace pottsmix::smoothing
