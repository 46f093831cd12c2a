#include "pottsmix/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "pottsmix/errors.hpp"

namespace pottsmix::metrics {

double source_correlation(const MatrixXd& estimate, const MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw DegenerateInputError("estimate and truth differ in shape");
  const double n = static_cast<double>(estimate.size());
  const Eigen::ArrayXXd a = estimate.array() - estimate.sum() / n;
  const Eigen::ArrayXXd b = truth.array() - truth.sum() / n;
  const double saa = a.square().sum();
  const double sbb = b.square().sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DomainError("correlation is undefined for constant input");
  return std::clamp((a * b).sum() / std::sqrt(saa * sbb), -1.0, 1.0);
}

TmseResult tmse(const std::vector<MatrixXd>& estimates, const MatrixXd& truth, const std::vector<bool>& active_mask) {
  if (estimates.empty()) throw ParameterError("tmse needs at least one replicate");
  if (static_cast<Eigen::Index>(active_mask.size()) != truth.rows())
    throw DegenerateInputError("active mask length does not match the number of locations");
  MatrixXd mse = MatrixXd::Zero(truth.rows(), truth.cols());
  for (const MatrixXd& e : estimates) {
    if (e.rows() != truth.rows() || e.cols() != truth.cols())
      throw DegenerateInputError("replicate estimate differs in shape from the truth");
    mse += (e - truth).array().square().matrix();
  }
  mse /= static_cast<double>(estimates.size());

  TmseResult r;
  int n_active = 0;
  for (Eigen::Index j = 0; j < truth.rows(); ++j) {
    const double row = mse.row(j).sum();
    if (active_mask[j]) {
      r.active += row;
      ++n_active;
    } else {
      r.inactive += row;
    }
  }
  r.active_empty = n_active == 0;
  r.inactive_empty = n_active == truth.rows();
  return r;
}

RateResult fp_fn_rates(const Labeling& estimated, const Labeling& truth, const Geometry& geometry) {
  if (estimated.num_voxels() != geometry.num_voxels() || truth.num_voxels() != geometry.num_voxels())
    throw InvalidGeometryError("labelings do not match the voxel grid");
  RateResult r;
  for (int j = 0; j < geometry.num_locations(); ++j) {
    const int v = geometry.voxel_of(j);
    const bool declared = estimated[v] != 0;
    const bool actual = truth[v] != 0;
    if (declared && actual) ++r.tp;
    if (declared && !actual) ++r.fp;
    if (!declared && actual) ++r.fn;
    if (!declared && !actual) ++r.tn;
  }
  r.fp_undefined = r.fp + r.tp == 0;
  r.fn_undefined = r.fn + r.tn == 0;
  r.p_fp = r.fp_undefined ? 0.0 : static_cast<double>(r.fp) / (r.fp + r.tp);
  r.p_fn = r.fn_undefined ? 0.0 : static_cast<double>(r.fn) / (r.fn + r.tn);
  return r;
}

VectorXd power_map(const MatrixXd& sources) { return sources.rowwise().squaredNorm(); }

namespace {

ModalityResiduals modality(const MatrixXd& data, const MatrixXd& op, const MatrixXd& sources) {
  ModalityResiduals m;
  m.fitted = op * sources;
  m.residuals = data - m.fitted;
  const Eigen::Index n = m.residuals.size();
  m.qq_sample = Eigen::Map<const VectorXd>(m.residuals.data(), n);
  std::sort(m.qq_sample.data(), m.qq_sample.data() + n);
  m.qq_theoretical.resize(n);
  const boost::math::normal_distribution<double> std_normal;
  for (Eigen::Index i = 0; i < n; ++i)
    m.qq_theoretical[i] = boost::math::quantile(std_normal, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return m;
}

}  // namespace

ResidualDiagnostics residual_diagnostics(const SensorDataset& dataset, const LeadFieldPair& leadfields,
                                         const MatrixXd& sources) {
  if (leadfields.num_sources() != sources.rows())
    throw InvalidGeometryError("sources do not match the lead-field columns");
  ResidualDiagnostics d;
  d.meg = modality(dataset.meg, leadfields.x_meg, sources);
  d.eeg = modality(dataset.eeg, leadfields.x_eeg, sources);
  return d;
}

}  // namespace pottsmix::metrics
