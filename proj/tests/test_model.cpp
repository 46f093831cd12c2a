#include <random>

#include "doctest.h"
#include "pottsmix/errors.hpp"
#include "pottsmix/model.hpp"

using namespace pottsmix;

namespace {

MatrixXd random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  return MatrixXd::NullaryExpr(r, c, [&]() { return nd(rng); });
}

double unit_trace(const MatrixXd& a) { return (a * a.transpose()).trace() / static_cast<double>(a.rows()); }

struct Problem {
  SensorDataset data;
  LeadFieldPair lf;
};

Problem random_problem(std::mt19937_64& rng, int nm = 5, int ne = 4, int p = 7, int t = 6) {
  Problem pr;
  pr.data.meg = random_matrix(nm, t, rng);
  pr.data.eeg = random_matrix(ne, t, rng);
  pr.lf = LeadFieldPair::with_identity_noise(random_matrix(nm, p, rng), random_matrix(ne, p, rng));
  return pr;
}

Geometry line_geometry(int p) {
  std::vector<Point3> locs;
  for (int i = 0; i < p; ++i) locs.emplace_back(i, 0, 0);
  return Geometry::build(locs, {p, 1, 1});
}

}  // namespace

TEST_CASE("standardize leaves a unit-trace identity unchanged") {
  std::mt19937_64 rng(1);
  Problem pr = random_problem(rng, 2, 2, 3, 2);
  pr.data.meg = MatrixXd::Identity(2, 2);
  const Standardized st = standardize(pr.data, pr.lf);
  CHECK(st.dataset.meg.isApprox(MatrixXd::Identity(2, 2), 1e-15));
  CHECK(st.scales.meg == doctest::Approx(1.0));
  CHECK(st.dataset.standardized);
}

TEST_CASE("standardize divides diag(2,2) by 2") {
  std::mt19937_64 rng(2);
  Problem pr = random_problem(rng, 2, 2, 3, 2);
  pr.data.meg = 2.0 * MatrixXd::Identity(2, 2);
  const Standardized st = standardize(pr.data, pr.lf);
  CHECK(st.scales.meg == doctest::Approx(2.0).epsilon(1e-15));
  CHECK((st.dataset.meg - MatrixXd::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("standardized matrices have unit mean trace") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Problem pr = random_problem(rng);
    const Standardized st = standardize(pr.data, pr.lf);
    CHECK(std::abs(unit_trace(st.dataset.meg) - 1.0) < 1e-12);
    CHECK(std::abs(unit_trace(st.dataset.eeg) - 1.0) < 1e-12);
    CHECK(std::abs(unit_trace(st.leadfields.x_meg) - 1.0) < 1e-12);
    CHECK(std::abs(unit_trace(st.leadfields.x_eeg) - 1.0) < 1e-12);
  }
}

TEST_CASE("standardize is invariant to positive rescaling") {
  std::mt19937_64 rng(4);
  const Problem pr = random_problem(rng);
  Problem scaled = pr;
  scaled.data.meg *= 37.5;
  scaled.lf.x_eeg *= 0.01;
  const Standardized a = standardize(pr.data, pr.lf);
  const Standardized b = standardize(scaled.data, scaled.lf);
  CHECK((a.dataset.meg - b.dataset.meg).norm() < 1e-12);
  CHECK((a.leadfields.x_eeg - b.leadfields.x_eeg).norm() < 1e-12);
}

TEST_CASE("standardize rejects all-zero input and double application") {
  std::mt19937_64 rng(5);
  Problem pr = random_problem(rng);
  Problem zero = pr;
  zero.data.eeg.setZero();
  CHECK_THROWS_AS(standardize(zero.data, zero.lf), DegenerateInputError);
  const Standardized st = standardize(pr.data, pr.lf);
  CHECK_THROWS_AS(standardize(st.dataset, st.leadfields), DegenerateInputError);
}

TEST_CASE("source scale is the geometric mean of the data-to-operator ratios") {
  StandardizationScales sc{4.0, 9.0, 2.0, 1.0};
  CHECK(sc.source_scale() == doctest::Approx(std::sqrt(2.0 * 9.0)));
}

TEST_CASE("collapse with singleton clusters is the identity") {
  std::mt19937_64 rng(6);
  const Problem pr = random_problem(rng, 3, 2, 5, 4);
  const Geometry g = line_geometry(5);
  const LeadFieldPair c = collapse_leadfield(pr.lf, g);
  CHECK(c.x_meg == pr.lf.x_meg);
  CHECK(c.x_eeg == pr.lf.x_eeg);
}

TEST_CASE("collapse sums the columns of a cluster") {
  MatrixXd x(2, 2);
  x << 1, 0, 0, 1;
  const LeadFieldPair lf = LeadFieldPair::with_identity_noise(x, x);
  const Geometry g = line_geometry(2).with_clusters({0, 0});
  const LeadFieldPair c = collapse_leadfield(lf, g);
  REQUIRE(c.x_meg.cols() == 1);
  CHECK(c.x_meg(0, 0) == 1.0);
  CHECK(c.x_meg(1, 0) == 1.0);
}

TEST_CASE("collapsed projection equals expanded projection") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const LeadFieldPair lf = LeadFieldPair::with_identity_noise(random_matrix(4, 6, rng), random_matrix(3, 6, rng));
    const Geometry g = line_geometry(6).with_clusters({0, 1, 2, 2, 0, 1});
    const LeadFieldPair c = collapse_leadfield(lf, g);
    const MatrixXd s = random_matrix(3, 5, rng);
    const MatrixXd full = expand_sources(s, g);
    CHECK((c.x_meg * s - lf.x_meg * full).norm() < 1e-12);
    CHECK((c.x_eeg * s - lf.x_eeg * full).norm() < 1e-12);
  }
}

TEST_CASE("collapse rejects a geometry of the wrong size") {
  std::mt19937_64 rng(8);
  const Problem pr = random_problem(rng, 3, 2, 5, 4);
  CHECK_THROWS_AS(collapse_leadfield(pr.lf, line_geometry(4)), InvalidGeometryError);
}

TEST_CASE("expand_sources") {
  std::mt19937_64 rng(9);
  const MatrixXd s = random_matrix(4, 3, rng);
  SUBCASE("singletons") { CHECK(expand_sources(s, line_geometry(4)) == s); }
  SUBCASE("one cluster") {
    const Geometry g = line_geometry(4).with_clusters({0, 0, 0, 0});
    const MatrixXd e = expand_sources(s.topRows(1), g);
    for (int j = 0; j < 4; ++j) CHECK(e.row(j) == s.row(0));
  }
  SUBCASE("round trip through cluster averages") {
    const Geometry g = line_geometry(4).with_clusters({1, 0, 1, 0});
    const MatrixXd full = expand_sources(s.topRows(2), g);
    CHECK((expand_sources(cluster_average(full, g), g) - full).norm() < 1e-15);
  }
}

TEST_CASE("labeling keeps exactly one active entry per voxel") {
  Labeling z(5, 3);
  z.set(2, 2);
  for (int v = 0; v < 5; ++v) CHECK(z.one_hot(v).sum() == 1.0);
  CHECK(z.one_hot(2)[2] == 1.0);
  CHECK_THROWS_AS(z.set(0, 3), InvalidLabelError);
  CHECK_THROWS_AS(Labeling({0, 4}, 3), InvalidLabelError);
  CHECK(z.counts() == std::vector<int>{4, 0, 1});
}

TEST_CASE("validation errors") {
  Hyperparams h;
  h.b_alpha = 0.0;
  CHECK_THROWS_AS(h.validate(), ParameterError);

  std::mt19937_64 rng(10);
  Problem pr = random_problem(rng);
  pr.lf.h_meg(0, 0) = -1.0;
  CHECK_THROWS_AS(pr.lf.validate(), DegenerateInputError);

  SensorDataset d;
  d.meg = MatrixXd::Ones(2, 1);
  d.eeg = MatrixXd::Ones(2, 1);
  CHECK_THROWS_AS(d.validate(), DegenerateInputError);

  ModelState s;
  s.labels = Labeling(4, 2);
  s.sources = MatrixXd::Zero(2, 3);
  s.mu_active = MatrixXd::Zero(1, 3);
  s.a_matrix = MatrixXd::Zero(1, 1);
  s.alpha = VectorXd::Ones(2);
  CHECK_NOTHROW(s.validate());
  s.alpha[1] = 0.0;
  CHECK_THROWS_AS(s.validate(), ParameterError);
}
