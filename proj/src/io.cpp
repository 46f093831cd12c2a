#include "pottsmix/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pottsmix/errors.hpp"

namespace pottsmix::io {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    throw IngestionError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  return v;
}

// Rows of numeric fields after a header line.
std::vector<std::vector<double>> read_numeric(const fs::path& path, std::size_t expected_cols,
                                              std::vector<std::string>* header_out = nullptr) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path.string() + " is empty");
  const std::vector<std::string> header = split(line);
  if (expected_cols && header.size() != expected_cols)
    throw IngestionError(path.string() + ": expected " + std::to_string(expected_cols) + " columns");
  if (header_out) *header_out = header;
  std::vector<std::vector<double>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw IngestionError(path.string() + ":" + std::to_string(n) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) row[i] = parse_double(fields[i], path, n);
    rows.push_back(std::move(row));
  }
  return rows;
}

int as_index(double v, const fs::path& path) {
  if (v != std::floor(v) || v < 1.0) throw IngestionError(path.string() + ": ids must be positive integers");
  return static_cast<int>(v) - 1;
}

}  // namespace

void write_matrix_csv(const fs::path& path, const MatrixXd& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? ",c" : "c") << c + 1;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << fmt(m(r, c));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

MatrixXd read_matrix_csv(const fs::path& path) {
  std::vector<std::string> header;
  const auto rows = read_numeric(path, 0, &header);
  MatrixXd m(rows.size(), header.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < header.size(); ++c) m(r, c) = rows[r][c];
  return m;
}

void write_geometry_csv(const fs::path& path, const Geometry& geometry) {
  std::ofstream out = open_out(path);
  out << "id,x,y,z\n";
  for (int j = 0; j < geometry.num_locations(); ++j) {
    const Point3& p = geometry.location(j);
    out << j + 1 << ',' << fmt(p.x()) << ',' << fmt(p.y()) << ',' << fmt(p.z()) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Point3> read_geometry_csv(const fs::path& path) {
  const auto rows = read_numeric(path, 4);
  std::vector<Point3> pts(rows.size());
  std::vector<char> seen(rows.size(), 0);
  for (const auto& r : rows) {
    const int id = as_index(r[0], path);
    if (id >= static_cast<int>(rows.size()) || seen[id])
      throw IngestionError(path.string() + ": location ids must be a permutation of 1..P");
    seen[id] = 1;
    pts[id] = Point3(r[1], r[2], r[3]);
  }
  return pts;
}

void write_labels_csv(const fs::path& path, const Labeling& labels) {
  std::ofstream out = open_out(path);
  out << "voxel,label\n";
  for (int v = 0; v < labels.num_voxels(); ++v) out << v + 1 << ',' << labels[v] + 1 << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Labeling read_labels_csv(const fs::path& path, int k) {
  const auto rows = read_numeric(path, 2);
  std::vector<int> labels(rows.size(), -1);
  for (const auto& r : rows) {
    const int v = as_index(r[0], path);
    const int l = as_index(r[1], path);
    if (v >= static_cast<int>(rows.size()) || labels[v] >= 0)
      throw IngestionError(path.string() + ": voxel ids must be a permutation of 1..N");
    if (l >= k) throw IngestionError(path.string() + ": label " + std::to_string(l + 1) + " exceeds K");
    labels[v] = l;
  }
  return Labeling(std::move(labels), k);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw IngestionError("ragged matrix in JSON");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json to_json(const Hyperparams& h) {
  return {{"a_e", h.a_e},         {"b_e", h.b_e},         {"a_m", h.a_m},         {"b_m", h.b_m},
          {"a_alpha", h.a_alpha}, {"b_alpha", h.b_alpha}, {"a_a", h.a_a},         {"b_a", h.b_a},
          {"sigma2_A", h.sigma2_A}, {"sigma2_mu1", h.sigma2_mu1}};
}

void merge_json(const json& j, Hyperparams& h) {
  auto get = [&](const char* key, double& v) {
    if (j.contains(key)) v = j.at(key).get<double>();
  };
  get("a_e", h.a_e);
  get("b_e", h.b_e);
  get("a_m", h.a_m);
  get("b_m", h.b_m);
  get("a_alpha", h.a_alpha);
  get("b_alpha", h.b_alpha);
  get("a_a", h.a_a);
  get("b_a", h.b_a);
  get("sigma2_A", h.sigma2_A);
  get("sigma2_mu1", h.sigma2_mu1);
}

json to_json(const ModelState& s, const Geometry& geometry) {
  std::vector<int> labels(s.labels.values());
  for (int& l : labels) ++l;
  std::vector<int> clusters(geometry.num_locations());
  for (int j = 0; j < geometry.num_locations(); ++j) clusters[j] = geometry.cluster_of(j) + 1;
  return {{"k", s.k()},
          {"sources", to_json(s.sources)},
          {"labels", labels},
          {"mu_active", to_json(s.mu_active)},
          {"a_matrix", to_json(s.a_matrix)},
          {"sigma2_a", s.sigma2_a},
          {"sigma2_m", s.sigma2_m},
          {"sigma2_e", s.sigma2_e},
          {"alpha", std::vector<double>(s.alpha.data(), s.alpha.data() + s.alpha.size())},
          {"beta", s.beta},
          {"cluster_of", clusters}};
}

json to_json(const synth::SignalSpec& s) {
  return {{"kind", s.kind == synth::SignalKind::sinusoid ? "sinusoid" : "gaussian_bump"},
          {"amplitude", s.amplitude},
          {"peak", s.peak},
          {"width", s.width},
          {"frequency", s.frequency},
          {"phase", s.phase}};
}

synth::SignalSpec signal_from_json(const json& j) {
  synth::SignalSpec s;
  const std::string kind = j.value("kind", "gaussian_bump");
  if (kind == "sinusoid") {
    s.kind = synth::SignalKind::sinusoid;
  } else if (kind == "gaussian_bump") {
    s.kind = synth::SignalKind::gaussian_bump;
  } else {
    throw IngestionError("unknown signal kind '" + kind + "'");
  }
  s.amplitude = j.value("amplitude", s.amplitude);
  s.peak = j.value("peak", s.peak);
  s.width = j.value("width", s.width);
  s.frequency = j.value("frequency", s.frequency);
  s.phase = j.value("phase", s.phase);
  return s;
}

json to_json(const synth::ScenarioConfig& c) {
  json signals = json::array();
  for (const auto& s : c.signals) signals.push_back(to_json(s));
  return {{"name", c.name},
          {"num_locations", c.num_locations},
          {"grid", {c.grid.nx, c.grid.ny, c.grid.nz}},
          {"n_meg", c.n_meg},
          {"n_eeg", c.n_eeg},
          {"num_times", c.num_times},
          {"smoothness", c.smoothness},
          {"noise_fraction", c.noise_fraction},
          {"region_sizes", c.region_sizes},
          {"region_components", c.region_components},
          {"signals", signals}};
}

synth::ScenarioConfig scenario_from_json(const json& j) {
  try {
    synth::ScenarioConfig c;
    c.name = j.value("name", c.name);
    c.num_locations = j.value("num_locations", c.num_locations);
    if (j.contains("grid")) {
      const auto g = j.at("grid").get<std::vector<int>>();
      if (g.size() != 3) throw IngestionError("grid must have three entries");
      c.grid = {g[0], g[1], g[2]};
    }
    c.n_meg = j.value("n_meg", c.n_meg);
    c.n_eeg = j.value("n_eeg", c.n_eeg);
    c.num_times = j.value("num_times", c.num_times);
    c.smoothness = j.value("smoothness", c.smoothness);
    c.noise_fraction = j.value("noise_fraction", c.noise_fraction);
    c.region_sizes = j.value("region_sizes", c.region_sizes);
    c.region_components = j.value("region_components", c.region_components);
    if (j.contains("signals"))
      for (const auto& s : j.at("signals")) c.signals.push_back(signal_from_json(s));
    return c;
  } catch (const json::exception& e) {
    throw IngestionError(std::string("invalid scenario description: ") + e.what());
  }
}

json to_json(const study::ReplicateRecord& r) {
  auto metrics = [](const study::ReplicateMetrics& m) {
    return json{{"correlation", m.correlation},
                {"sse_active", m.sse_active},
                {"sse_inactive", m.sse_inactive},
                {"p_fp", m.p_fp},
                {"p_fn", m.p_fn}};
  };
  json j{{"scenario", r.scenario},     {"clusters", r.clusters},     {"replicate", r.replicate},
         {"scene_seed", r.scene_seed}, {"noise_seed", r.noise_seed}, {"fit_seed", r.fit_seed},
         {"failed", r.failed}};
  if (r.failed) {
    j["error"] = r.error;
  } else {
    j["k_hat"] = r.k_hat;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["smoothed"] = metrics(r.smoothed);
    j["unsmoothed"] = metrics(r.unsmoothed);
  }
  return j;
}

void write_study_tables(const fs::path& dir, const study::StudyResult& result) {
  ensure_directory(dir);
  {
    std::ofstream out = open_out(dir / "table1.csv");
    out << "scenario,clusters,smoothing,avg_corr,tmse_active,tmse_inactive,p_fp,p_fn\n";
    for (const auto& r : result.rows)
      out << r.scenario << ',' << r.clusters << ',' << (r.smoothing ? "yes" : "no") << ',' << fmt(r.avg_corr) << ','
          << fmt(r.tmse_active) << ',' << fmt(r.tmse_inactive) << ',' << fmt(r.p_fp) << ',' << fmt(r.p_fn) << '\n';
  }
  {
    std::ofstream out = open_out(dir / "khat_hist.csv");
    out << "scenario,clusters,k,count\n";
    for (const auto& h : result.histograms)
      for (std::size_t k = 0; k < h.counts.size(); ++k)
        out << h.scenario << ',' << h.clusters << ',' << k + 1 << ',' << h.counts[k] << '\n';
  }
  for (const auto& h : result.histograms) {
    std::ofstream out = open_out(dir / ("khat_" + h.scenario + "_J" + std::to_string(h.clusters) + ".csv"));
    out << "k,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) out << k + 1 << ',' << h.counts[k] << '\n';
  }
  const fs::path rec_dir = dir / "records";
  ensure_directory(rec_dir);
  json failures = json::array();
  for (const auto& r : result.records) {
    const std::string stem = r.scenario + "_J" + std::to_string(r.clusters) + "_r" + std::to_string(r.replicate);
    write_json(rec_dir / (stem + ".json"), to_json(r));
    if (r.failed) failures.push_back({{"record", stem}, {"error", r.error}});
  }
  write_json(dir / "failures.json", failures);
}

}  // namespace pottsmix::io
