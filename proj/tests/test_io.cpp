#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "pottsmix/errors.hpp"
#include "pottsmix/io.hpp"

using namespace pottsmix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pottsmix_io_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& f) const { return path / f; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("matrix csv round trip is exact") {
  TempDir dir("matrix");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1e3);
  MatrixXd m = MatrixXd::NullaryExpr(7, 5, [&]() { return nd(rng); });
  m(0, 0) = 1e-300;
  m(1, 1) = -0.0;
  m(2, 2) = 0.1;
  io::write_matrix_csv(dir / "m.csv", m);
  CHECK(io::read_matrix_csv(dir / "m.csv") == m);

  std::ifstream in(dir / "m.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "c1,c2,c3,c4,c5");
}

TEST_CASE("malformed matrix files raise IngestionError") {
  TempDir dir("bad");
  CHECK_THROWS_AS(io::read_matrix_csv(dir / "missing.csv"), IngestionError);
  write_text(dir / "empty.csv", "");
  CHECK_THROWS_AS(io::read_matrix_csv(dir / "empty.csv"), IngestionError);
  write_text(dir / "ragged.csv", "c1,c2\n1,2\n3\n");
  CHECK_THROWS_AS(io::read_matrix_csv(dir / "ragged.csv"), IngestionError);
  write_text(dir / "text.csv", "c1,c2\n1,abc\n");
  CHECK_THROWS_AS(io::read_matrix_csv(dir / "text.csv"), IngestionError);
}

TEST_CASE("geometry and labels round trip with 1-based ids") {
  TempDir dir("geom");
  std::vector<Point3> locs{Point3(0, 0, 0), Point3(1, 0.5, 0.25), Point3(0.75, 1, 1)};
  const Geometry g = Geometry::build(locs, {2, 2, 2});
  io::write_geometry_csv(dir / "g.csv", g);
  const auto back = io::read_geometry_csv(dir / "g.csv");
  REQUIRE(back.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(back[j] == locs[j]);

  const Labeling labels({0, 2, 1, 0, 0, 1, 2, 2}, 3);
  io::write_labels_csv(dir / "l.csv", labels);
  CHECK(io::read_labels_csv(dir / "l.csv", 3) == labels);
  CHECK_THROWS_AS(io::read_labels_csv(dir / "l.csv", 2), IngestionError);

  std::ifstream in(dir / "l.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "voxel,label");
  std::getline(in, line);
  CHECK(line == "1,1");

  write_text(dir / "dup.csv", "id,x,y,z\n1,0,0,0\n1,1,1,1\n");
  CHECK_THROWS_AS(io::read_geometry_csv(dir / "dup.csv"), IngestionError);
  write_text(dir / "zero.csv", "voxel,label\n0,1\n");
  CHECK_THROWS_AS(io::read_labels_csv(dir / "zero.csv", 2), IngestionError);
}

TEST_CASE("json round trips") {
  Hyperparams h;
  h.a_e = 0.3;
  h.sigma2_mu1 = 7.0;
  Hyperparams back;
  io::merge_json(io::to_json(h), back);
  CHECK(back.a_e == 0.3);
  CHECK(back.sigma2_mu1 == 7.0);
  CHECK(back.b_alpha == h.b_alpha);

  const synth::ScenarioConfig sc = synth::preset("four-state-sinusoid", 300, 40);
  const synth::ScenarioConfig sc2 = io::scenario_from_json(io::to_json(sc));
  CHECK(io::to_json(sc2) == io::to_json(sc));
  CHECK(sc2.signals[2].kind == synth::SignalKind::sinusoid);
  CHECK_THROWS_AS(io::scenario_from_json({{"grid", {1, 2}}}), IngestionError);
  CHECK_THROWS_AS(io::signal_from_json({{"kind", "square"}}), IngestionError);

  MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6.5;
  CHECK(io::matrix_from_json(io::to_json(m)) == m);
  CHECK_THROWS_AS(io::matrix_from_json(io::json::parse("[[1,2],[3]]")), IngestionError);
}

TEST_CASE("json files and directories") {
  TempDir dir("json");
  io::write_json(dir / "a.json", {{"x", 1}});
  CHECK(io::read_json(dir / "a.json")["x"] == 1);
  write_text(dir / "b.json", "{not json");
  CHECK_THROWS_AS(io::read_json(dir / "b.json"), IngestionError);
  write_text(dir / "file", "x");
  CHECK_THROWS_AS(io::ensure_directory(dir / "file" / "sub"), IoError);
  io::ensure_directory(dir / "x" / "y");
  CHECK(fs::is_directory(dir / "x" / "y"));
}

TEST_CASE("study tables") {
  TempDir dir("study");
  study::StudyResult r;
  study::TableRow row;
  row.scenario = "two-state";
  row.clusters = 100;
  row.smoothing = true;
  row.avg_corr = 0.5;
  r.rows.push_back(row);
  r.histograms.push_back({"two-state", 100, {3, 1}});
  study::ReplicateRecord ok;
  ok.scenario = "two-state";
  ok.clusters = 100;
  ok.replicate = 0;
  study::ReplicateRecord bad = ok;
  bad.replicate = 1;
  bad.failed = true;
  bad.error = "boom";
  r.records = {ok, bad};
  io::write_study_tables(dir.path, r);
  for (const char* f : {"table1.csv", "khat_hist.csv", "khat_two-state_J100.csv", "failures.json",
                        "records/two-state_J100_r0.json", "records/two-state_J100_r1.json"})
    CHECK(fs::exists(dir / f));
  const io::json failures = io::read_json(dir / "failures.json");
  REQUIRE(failures.size() == 1);
  CHECK(failures[0]["error"] == "boom");
  CHECK(io::read_json(dir / "records/two-state_J100_r0.json").contains("k_hat"));
  std::ifstream in(dir / "khat_hist.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "two-state,100,1,3");
}
