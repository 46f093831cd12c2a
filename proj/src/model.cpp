#include "pottsmix/model.hpp"

#include <cmath>
#include <string>

#include "pottsmix/errors.hpp"

namespace pottsmix {

namespace {

void check_spd(const MatrixXd& h, const char* name) {
  if (h.rows() != h.cols()) throw DegenerateInputError(std::string(name) + " is not square");
  if (!h.isApprox(h.transpose(), 1e-12)) throw DegenerateInputError(std::string(name) + " is not symmetric");
  Eigen::LLT<MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) throw DegenerateInputError(std::string(name) + " is not positive definite");
}

}  // namespace

void SensorDataset::validate() const {
  if (meg.rows() < 1 || eeg.rows() < 1) throw DegenerateInputError("dataset needs at least one MEG and one EEG sensor");
  if (meg.cols() < 2) throw DegenerateInputError("dataset needs at least two time points");
  if (meg.cols() != eeg.cols())
    throw DegenerateInputError("MEG has " + std::to_string(meg.cols()) + " time points, EEG has " +
                               std::to_string(eeg.cols()));
  if (sample_times.size() != 0 && sample_times.size() != meg.cols())
    throw DegenerateInputError("sample_times length does not match T");
  if (!meg.allFinite() || !eeg.allFinite()) throw DegenerateInputError("dataset contains non-finite values");
}

LeadFieldPair LeadFieldPair::with_identity_noise(MatrixXd x_meg, MatrixXd x_eeg) {
  LeadFieldPair lf;
  lf.h_meg = MatrixXd::Identity(x_meg.rows(), x_meg.rows());
  lf.h_eeg = MatrixXd::Identity(x_eeg.rows(), x_eeg.rows());
  lf.x_meg = std::move(x_meg);
  lf.x_eeg = std::move(x_eeg);
  return lf;
}

void LeadFieldPair::validate() const {
  if (x_meg.cols() != x_eeg.cols())
    throw DegenerateInputError("MEG operator has " + std::to_string(x_meg.cols()) + " columns, EEG operator has " +
                               std::to_string(x_eeg.cols()));
  if (h_meg.rows() != x_meg.rows()) throw DegenerateInputError("H_M size does not match the MEG operator");
  if (h_eeg.rows() != x_eeg.rows()) throw DegenerateInputError("H_E size does not match the EEG operator");
  check_spd(h_meg, "H_M");
  check_spd(h_eeg, "H_E");
}

Labeling::Labeling(int num_voxels, int k, int fill) : labels_(num_voxels, fill), k_(k) {
  if (k < 1) throw InvalidLabelError("labeling needs K >= 1");
  if (fill < 0 || fill >= k) throw InvalidLabelError("fill label out of range");
}

Labeling::Labeling(std::vector<int> labels, int k) : labels_(std::move(labels)), k_(k) {
  if (k < 1) throw InvalidLabelError("labeling needs K >= 1");
  for (int l : labels_)
    if (l < 0 || l >= k) throw InvalidLabelError("label " + std::to_string(l) + " outside [0, K)");
}

void Labeling::set(int v, int label) {
  if (label < 0 || label >= k_) throw InvalidLabelError("label " + std::to_string(label) + " outside [0, K)");
  labels_[v] = label;
}

VectorXd Labeling::one_hot(int v) const {
  VectorXd z = VectorXd::Zero(k_);
  z[labels_[v]] = 1.0;
  return z;
}

std::vector<int> Labeling::counts() const {
  std::vector<int> c(k_, 0);
  for (int l : labels_) ++c[l];
  return c;
}

void Hyperparams::validate() const {
  for (double x : {a_e, b_e, a_m, b_m, a_alpha, b_alpha, a_a, b_a, sigma2_A, sigma2_mu1})
    if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError("hyperparameters must be finite and strictly positive");
}

void ModelState::validate() const {
  const int k = labels.k();
  if (k < 2) throw ParameterError("model needs K >= 2");
  if (mu_active.rows() != k - 1 || mu_active.cols() != sources.cols())
    throw ParameterError("mu_active must be (K-1) x T");
  if (a_matrix.rows() != k - 1 || a_matrix.cols() != k - 1) throw ParameterError("A must be (K-1) x (K-1)");
  if (alpha.size() != k) throw ParameterError("alpha must have K entries");
  if (!(sigma2_a > 0 && sigma2_m > 0 && sigma2_e > 0) || (alpha.array() <= 0.0).any())
    throw ParameterError("variance components must be strictly positive");
  if (beta < 0.0) throw ParameterError("beta must be nonnegative");
}

bool ModelState::operator==(const ModelState& o) const {
  return sources == o.sources && labels == o.labels && mu_active == o.mu_active && a_matrix == o.a_matrix &&
         sigma2_a == o.sigma2_a && sigma2_m == o.sigma2_m && sigma2_e == o.sigma2_e && alpha == o.alpha &&
         beta == o.beta;
}

double StandardizationScales::source_scale() const { return std::sqrt((meg / x_meg) * (eeg / x_eeg)); }

double rms_trace_scale(const MatrixXd& a) {
  if (a.rows() == 0) throw DegenerateInputError("empty matrix");
  return std::sqrt(a.squaredNorm() / static_cast<double>(a.rows()));
}

Standardized standardize(const SensorDataset& dataset, const LeadFieldPair& leadfields) {
  if (dataset.standardized) throw DegenerateInputError("dataset is already standardized");
  dataset.validate();
  if (leadfields.x_meg.rows() != dataset.meg.rows() || leadfields.x_eeg.rows() != dataset.eeg.rows())
    throw DegenerateInputError("lead-field rows do not match sensor counts");

  Standardized out;
  auto scale_of = [](const MatrixXd& a, const char* name) {
    const double s = rms_trace_scale(a);
    if (!(s > 0.0)) throw DegenerateInputError(std::string(name) + " has zero trace");
    return s;
  };
  out.scales.meg = scale_of(dataset.meg, "MEG data");
  out.scales.eeg = scale_of(dataset.eeg, "EEG data");
  out.scales.x_meg = scale_of(leadfields.x_meg, "MEG operator");
  out.scales.x_eeg = scale_of(leadfields.x_eeg, "EEG operator");

  out.dataset = dataset;
  out.dataset.meg /= out.scales.meg;
  out.dataset.eeg /= out.scales.eeg;
  out.dataset.standardized = true;
  out.leadfields = leadfields;
  out.leadfields.x_meg /= out.scales.x_meg;
  out.leadfields.x_eeg /= out.scales.x_eeg;
  return out;
}

LeadFieldPair collapse_leadfield(const LeadFieldPair& leadfields, const Geometry& geometry) {
  if (leadfields.num_sources() != geometry.num_locations())
    throw InvalidGeometryError("operator has " + std::to_string(leadfields.num_sources()) + " columns but geometry has " +
                               std::to_string(geometry.num_locations()) + " locations");
  const int nc = geometry.num_clusters();
  LeadFieldPair out;
  out.h_meg = leadfields.h_meg;
  out.h_eeg = leadfields.h_eeg;
  out.x_meg = MatrixXd::Zero(leadfields.x_meg.rows(), nc);
  out.x_eeg = MatrixXd::Zero(leadfields.x_eeg.rows(), nc);
  for (int c = 0; c < nc; ++c) {
    auto members = geometry.cluster_members(c);
    if (members.empty()) throw InvalidGeometryError("cluster " + std::to_string(c) + " is empty");
    for (int j : members) {
      out.x_meg.col(c) += leadfields.x_meg.col(j);
      out.x_eeg.col(c) += leadfields.x_eeg.col(j);
    }
  }
  return out;
}

MatrixXd expand_sources(const MatrixXd& cluster_sources, const Geometry& geometry) {
  if (cluster_sources.rows() != geometry.num_clusters())
    throw InvalidGeometryError("source rows do not match the cluster count");
  const int np = geometry.num_locations();
  MatrixXd out(np, cluster_sources.cols());
  for (int j = 0; j < np; ++j) out.row(j) = cluster_sources.row(geometry.cluster_of(j));
  return out;
}

MatrixXd expand_sources(const ModelState& state, const Geometry& geometry) {
  return expand_sources(state.sources, geometry);
}

MatrixXd cluster_average(const MatrixXd& location_sources, const Geometry& geometry) {
  if (location_sources.rows() != geometry.num_locations())
    throw InvalidGeometryError("source rows do not match the location count");
  MatrixXd out = MatrixXd::Zero(geometry.num_clusters(), location_sources.cols());
  for (int c = 0; c < geometry.num_clusters(); ++c) {
    auto members = geometry.cluster_members(c);
    for (int j : members) out.row(c) += location_sources.row(j);
    out.row(c) /= static_cast<double>(members.size());
  }
  return out;
}

}  // namespace pottsmix
