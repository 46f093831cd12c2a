#include "pottsmix/cli.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>
#include <optional>

#include <omp.h>

#include "CLI11.hpp"
#include "pottsmix/errors.hpp"
#include "pottsmix/io.hpp"
#include "pottsmix/metrics.hpp"
#include "pottsmix/pipeline.hpp"
#include "pottsmix/study.hpp"
#include "pottsmix/synth.hpp"

namespace pottsmix::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

struct Global {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  int threads = 0;
  bool verbose = false;
};

// Resolves one setting: an explicitly given flag wins over the config file,
// which wins over the default already stored in `value`.
template <typename T>
void resolve(T& value, const CLI::Option* flag, const T& flag_value, const json& section, const char* key) {
  if (flag && flag->count() > 0) {
    value = flag_value;
  } else if (section.is_object() && section.contains(key)) {
    try {
      value = section.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ParameterError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

json section(const json& config, const char* name) {
  return config.is_object() && config.contains(name) ? config.at(name) : json::object();
}

struct Dataset {
  SensorDataset data;
  LeadFieldPair leadfields;
  Geometry geometry;
};

Dataset read_dataset(const fs::path& dir, const GridDims& grid) {
  Dataset d;
  d.data.meg = io::read_matrix_csv(dir / "meg.csv");
  d.data.eeg = io::read_matrix_csv(dir / "eeg.csv");
  MatrixXd xm = io::read_matrix_csv(dir / "leadfield_meg.csv");
  MatrixXd xe = io::read_matrix_csv(dir / "leadfield_eeg.csv");
  std::vector<Point3> pts = io::read_geometry_csv(dir / "geometry.csv");

  if (d.data.meg.cols() != d.data.eeg.cols())
    throw IngestionError("meg.csv and eeg.csv disagree on the number of time points");
  if (xm.rows() != d.data.meg.rows())
    throw IngestionError("meg.csv and leadfield_meg.csv disagree on the number of MEG sensors");
  if (xe.rows() != d.data.eeg.rows())
    throw IngestionError("eeg.csv and leadfield_eeg.csv disagree on the number of EEG sensors");
  if (xm.cols() != xe.cols())
    throw IngestionError("leadfield_meg.csv and leadfield_eeg.csv disagree on the number of locations");
  if (xm.cols() != static_cast<Eigen::Index>(pts.size()))
    throw IngestionError("leadfield_meg.csv and geometry.csv disagree on the number of locations");
  if (d.data.meg.cols() < 2) throw IngestionError("meg.csv needs at least two time points");

  d.data.sample_times = VectorXd::LinSpaced(d.data.meg.cols(), 0.0, static_cast<double>(d.data.meg.cols() - 1));
  d.leadfields = LeadFieldPair::with_identity_noise(std::move(xm), std::move(xe));
  d.geometry = Geometry::build(std::move(pts), grid);
  return d;
}

GridDims grid_from_manifest(const fs::path& dir, GridDims fallback) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) return fallback;
  const json m = io::read_json(manifest);
  if (m.contains("scenario") && m["scenario"].contains("grid")) {
    const auto g = m["scenario"]["grid"].get<std::vector<int>>();
    if (g.size() == 3) return {g[0], g[1], g[2]};
  }
  return fallback;
}

Labeling read_any_labels(const fs::path& path) {
  // K is not stored with the labels; the largest label bounds it.
  const MatrixXd raw = io::read_matrix_csv(path);
  if (raw.cols() != 2) throw IngestionError(path.string() + ": expected columns voxel,label");
  const int k = std::max(2, static_cast<int>(raw.col(1).maxCoeff()));
  return io::read_labels_csv(path, k);
}

struct SimFlags {
  std::string preset = "two-state";
  std::string manifest;
  int p = 1000;
  int t = 60;
  int n_meg = 30;
  int n_eeg = 20;
  double smoothness = 0.3;
  double noise = 0.05;
  std::vector<int> grid{8, 8, 8};
};

int cmd_simulate(const Global& g, const json& config, const SimFlags& f, const CLI::App& sub, std::ostream& out) {
  const std::string& manifest_path = f.manifest;
  const json sim = section(config, "simulate");
  synth::ScenarioConfig sc;
  std::uint64_t scene_seed = g.seed;
  std::uint64_t noise_seed = g.seed;

  if (!manifest_path.empty()) {
    const json m = io::read_json(manifest_path);
    if (!m.contains("scenario")) throw IngestionError(manifest_path + ": no scenario block");
    sc = io::scenario_from_json(m.at("scenario"));
    scene_seed = m.value("scene_seed", scene_seed);
    noise_seed = m.value("noise_seed", noise_seed);
  } else {
    std::string preset = "two-state";
    resolve(preset, sub.get_option("--preset"), f.preset, sim, "preset");
    int p = 1000, t = 60;
    resolve(p, sub.get_option("--p"), f.p, sim, "num_locations");
    resolve(t, sub.get_option("--t"), f.t, sim, "num_times");
    sc = synth::preset(preset, p, t);
    resolve(sc.n_meg, sub.get_option("--n-meg"), f.n_meg, sim, "n_meg");
    resolve(sc.n_eeg, sub.get_option("--n-eeg"), f.n_eeg, sim, "n_eeg");
    resolve(sc.smoothness, sub.get_option("--smoothness"), f.smoothness, sim, "smoothness");
    resolve(sc.noise_fraction, sub.get_option("--noise"), f.noise, sim, "noise_fraction");
    std::vector<int> grid{sc.grid.nx, sc.grid.ny, sc.grid.nz};
    resolve(grid, sub.get_option("--grid"), f.grid, sim, "grid");
    if (grid.size() != 3) throw ParameterError("--grid needs three values");
    sc.grid = {grid[0], grid[1], grid[2]};
  }

  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  io::ensure_directory(dir);
  const synth::Simulation s = synth::simulate(sc, scene_seed, noise_seed);
  io::write_matrix_csv(dir / "meg.csv", s.dataset.meg);
  io::write_matrix_csv(dir / "eeg.csv", s.dataset.eeg);
  io::write_matrix_csv(dir / "leadfield_meg.csv", s.leadfields.x_meg);
  io::write_matrix_csv(dir / "leadfield_eeg.csv", s.leadfields.x_eeg);
  io::write_geometry_csv(dir / "geometry.csv", s.scene.geometry);
  io::write_labels_csv(dir / "truth_labels.csv", s.scene.true_labels);
  io::write_matrix_csv(dir / "truth_sources.csv", s.scene.true_sources);
  json manifest{{"generator", "pottsmix simulate"},
                {"scenario", io::to_json(sc)},
                {"scene_seed", scene_seed},
                {"noise_seed", noise_seed},
                {"true_k", sc.true_k()},
                {"files",
                 {"meg.csv", "eeg.csv", "leadfield_meg.csv", "leadfield_eeg.csv", "geometry.csv", "truth_labels.csv",
                  "truth_sources.csv", "manifest.json"}}};
  io::write_json(dir / "manifest.json", manifest);
  out << "wrote scenario '" << sc.name << "' to " << dir.string() << '\n';
  return kSuccess;
}

struct FitFlags {
  int k = 2;
  int clusters = 100;
  int max_iters = 50;
  double tol = 1e-3;
  bool no_smoothing = false;
  double span = 0.75;
  int degree = 2;
  std::vector<int> grid{8, 8, 8};
};

PipelineConfig pipeline_config(const Global& g, const json& config, const FitFlags& f, const CLI::App& sub) {
  PipelineConfig pc;
  pc.seed = g.seed;
  const json fit = section(config, "fit");
  const json sm = section(config, "smoothing");
  resolve(pc.k, sub.get_option("--k"), f.k, fit, "k");
  resolve(pc.clusters, sub.get_option("--j"), f.clusters, fit, "clusters");
  resolve(pc.solver.max_iters, sub.get_option("--max-iters"), f.max_iters, fit, "max_iters");
  resolve(pc.solver.tol, sub.get_option("--tol"), f.tol, fit, "tol");
  if (fit.contains("hyper")) io::merge_json(fit.at("hyper"), pc.hyper);
  bool enabled = true;
  resolve(enabled, nullptr, true, sm, "enabled");
  if (sub.get_option("--no-smoothing")->count() > 0) enabled = false;
  pc.smoothing = enabled;
  resolve(pc.loess.span, sub.get_option("--span"), f.span, sm, "span");
  resolve(pc.loess.degree, sub.get_option("--degree"), f.degree, sm, "degree");
  pc.hyper.validate();
  pc.solver.validate();
  pc.loess.validate();
  if (pc.k < 2) throw ParameterError("--k must be >= 2");
  return pc;
}

int cmd_fit(const Global& g, const json& config, const FitFlags& f, const std::string& data_dir,
            const CLI::App& sub, std::ostream& out, std::ostream& err) {
  const PipelineConfig pc = pipeline_config(g, config, f, sub);
  std::vector<int> grid = f.grid;
  resolve(grid, sub.get_option("--grid"), f.grid, section(config, "fit"), "grid");
  if (grid.size() != 3) throw ParameterError("--grid needs three values");
  GridDims dims{grid[0], grid[1], grid[2]};
  if (sub.get_option("--grid")->count() == 0) dims = grid_from_manifest(data_dir, dims);

  const Dataset d = read_dataset(data_dir, dims);
  icm::BlockObserver observer;
  if (g.verbose)
    observer = [&err](icm::Block b, int it, const ModelState& s) {
      if (b == icm::Block::beta) err << "iteration " << it << ": beta=" << s.beta << '\n';
    };
  const PipelineResult res = run_pipeline(d.data, d.leadfields, d.geometry, pc, observer);

  const fs::path dir = g.out.empty() ? fs::path(data_dir) : fs::path(g.out);
  io::ensure_directory(dir);
  io::write_matrix_csv(dir / "sources.csv", res.sources());
  io::write_labels_csv(dir / "labels.csv", res.fit.state.labels);
  json state = io::to_json(res.fit.state, res.geometry);
  state["source_scale"] = res.scales.source_scale();
  state["scales"] = {{"meg", res.scales.meg}, {"eeg", res.scales.eeg}, {"x_meg", res.scales.x_meg},
                     {"x_eeg", res.scales.x_eeg}};
  io::write_json(dir / "state.json", state);
  const FitReport& rep = res.fit.report;
  io::write_json(dir / "report.json", {{"k", pc.k},
                                       {"clusters", res.geometry.num_clusters()},
                                       {"seed", g.seed},
                                       {"k_hat", rep.k_hat},
                                       {"iterations", rep.iterations},
                                       {"converged", rep.converged},
                                       {"smoothing", pc.smoothing},
                                       {"objective_trace", rep.objective_trace},
                                       {"wall_time", rep.wall_time},
                                       {"hyper", io::to_json(pc.hyper)}});
  const VectorXd power = metrics::power_map(res.sources());
  {
    std::ofstream p(dir / "power.csv");
    if (!p) throw IoError("cannot write " + (dir / "power.csv").string());
    p << "id,power\n";
    for (Eigen::Index j = 0; j < power.size(); ++j) {
      char buf[32];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), power[j]);
      p << j + 1 << ',' << std::string(buf, end) << '\n';
    }
  }
  out << "k_hat=" << rep.k_hat << " iterations=" << rep.iterations << (rep.converged ? " converged" : "") << '\n';
  return kSuccess;
}

int cmd_metrics(const Global& g, const std::string& data_dir, const std::string& fit_dir_flag, std::ostream& out) {
  const fs::path data(data_dir);
  const fs::path fit = fit_dir_flag.empty() ? data : fs::path(fit_dir_flag);
  for (const char* f : {"truth_sources.csv", "truth_labels.csv"})
    if (!fs::exists(data / f)) throw IngestionError("missing truth file " + (data / f).string());
  for (const char* f : {"sources.csv", "labels.csv"})
    if (!fs::exists(fit / f)) throw IngestionError("missing fit output " + (fit / f).string());

  const Dataset d = read_dataset(data, grid_from_manifest(data, GridDims{}));
  const MatrixXd truth = io::read_matrix_csv(data / "truth_sources.csv");
  const MatrixXd est = io::read_matrix_csv(fit / "sources.csv");
  if (truth.rows() != est.rows() || truth.cols() != est.cols())
    throw IngestionError("sources.csv and truth_sources.csv differ in shape");
  Labeling true_labels = read_any_labels(data / "truth_labels.csv");
  Labeling est_labels = read_any_labels(fit / "labels.csv");
  if (true_labels.num_voxels() != d.geometry.num_voxels() || est_labels.num_voxels() != d.geometry.num_voxels())
    throw IngestionError("labels.csv and truth_labels.csv must cover the voxel grid");

  std::vector<bool> active(d.geometry.num_locations());
  for (int j = 0; j < d.geometry.num_locations(); ++j) active[j] = true_labels[d.geometry.voxel_of(j)] != 0;
  const metrics::TmseResult t = metrics::tmse({est}, truth, active);
  const metrics::RateResult r = metrics::fp_fn_rates(est_labels, true_labels, d.geometry);
  double corr = 0.0;
  bool corr_defined = true;
  try {
    corr = metrics::source_correlation(est, truth);
  } catch (const DomainError&) {
    corr_defined = false;
  }
  const metrics::ResidualDiagnostics diag = metrics::residual_diagnostics(d.data, d.leadfields, est);

  const fs::path dir = g.out.empty() ? fit : fs::path(g.out);
  io::ensure_directory(dir);
  io::write_json(dir / "metrics.json", {{"correlation", corr},
                                        {"correlation_defined", corr_defined},
                                        {"tmse_active", t.active},
                                        {"tmse_inactive", t.inactive},
                                        {"tmse_active_empty", t.active_empty},
                                        {"tmse_inactive_empty", t.inactive_empty},
                                        {"p_fp", r.p_fp},
                                        {"p_fn", r.p_fn},
                                        {"p_fp_undefined", r.fp_undefined},
                                        {"p_fn_undefined", r.fn_undefined},
                                        {"confusion", {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}}}});

  std::ofstream res(dir / "residuals.csv");
  std::ofstream qq(dir / "qq.csv");
  if (!res || !qq) throw IoError("cannot write diagnostics in " + dir.string());
  res << "modality,sensor,time,residual,fitted\n";
  qq << "modality,theoretical,sample\n";
  auto num = [](double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
  };
  for (auto [name, m] : {std::pair<const char*, const metrics::ModalityResiduals*>{"meg", &diag.meg},
                         std::pair<const char*, const metrics::ModalityResiduals*>{"eeg", &diag.eeg}}) {
    for (Eigen::Index i = 0; i < m->residuals.rows(); ++i)
      for (Eigen::Index t2 = 0; t2 < m->residuals.cols(); ++t2)
        res << name << ',' << i + 1 << ',' << t2 + 1 << ',' << num(m->residuals(i, t2)) << ','
            << num(m->fitted(i, t2)) << '\n';
    for (Eigen::Index i = 0; i < m->qq_sample.size(); ++i)
      qq << name << ',' << num(m->qq_theoretical[i]) << ',' << num(m->qq_sample[i]) << '\n';
  }
  out << "correlation=" << corr << " p_fp=" << r.p_fp << " p_fn=" << r.p_fn << '\n';
  return kSuccess;
}

int cmd_study(const Global& g, const json& config, std::string preset, const CLI::Option* preset_opt,
              int replicates, const CLI::Option* rep_opt, std::ostream& out, std::ostream& err) {
  const json st = section(config, "study");
  resolve(preset, preset_opt, preset, st, "preset");
  study::StudyConfig sc = study::preset(preset);
  resolve(sc.replicates, rep_opt, replicates, st, "replicates");
  sc.seed = g.seed;
  sc.threads = g.threads;
  const json sm = section(config, "smoothing");
  resolve(sc.pipeline.loess.span, nullptr, 0.0, sm, "span");
  resolve(sc.pipeline.loess.degree, nullptr, 0, sm, "degree");
  const json fit = section(config, "fit");
  resolve(sc.pipeline.solver.max_iters, nullptr, 0, fit, "max_iters");
  resolve(sc.pipeline.solver.tol, nullptr, 0.0, fit, "tol");
  if (fit.contains("hyper")) io::merge_json(fit.at("hyper"), sc.pipeline.hyper);

  if (g.verbose) err << "running study '" << preset << "' with " << sc.replicates << " replicates\n";
  const study::StudyResult res = study::run_study(sc);
  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  io::write_study_tables(dir, res);
  int failed = 0;
  for (const auto& r : res.records) failed += r.failed;
  out << "wrote " << res.rows.size() << " table rows to " << (dir / "table1.csv").string();
  if (failed) out << " (" << failed << " failed replicates)";
  out << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Potts-mixture spatiotemporal MEG/EEG source reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", g.verbose, "progress on stderr");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic scene and dataset");
  SimFlags sf;
  sim->add_option("--preset", sf.preset, "scenario preset");
  sim->add_option("--from-manifest", sf.manifest, "regenerate from a manifest.json");
  sim->add_option("--p", sf.p, "number of locations");
  sim->add_option("--t", sf.t, "number of time points");
  sim->add_option("--n-meg", sf.n_meg, "MEG sensors");
  sim->add_option("--n-eeg", sf.n_eeg, "EEG sensors");
  sim->add_option("--smoothness", sf.smoothness, "lead-field length-scale");
  sim->add_option("--noise", sf.noise, "noise variance as a fraction of signal variance");
  sim->add_option("--grid", sf.grid, "voxel grid nx ny nz")->expected(3);

  auto* fit = app.add_subcommand("fit", "fit the model to a dataset directory");
  FitFlags ff;
  std::string data_dir;
  fit->add_option("data", data_dir, "dataset directory")->required();
  fit->add_option("--k", ff.k, "mixture components");
  fit->add_option("--j", ff.clusters, "location clusters");
  fit->add_option("--max-iters", ff.max_iters, "ICM iteration cap");
  fit->add_option("--tol", ff.tol, "relative source-change tolerance");
  fit->add_flag("--no-smoothing", ff.no_smoothing, "skip loess smoothing");
  fit->add_option("--span", ff.span, "loess span");
  fit->add_option("--degree", ff.degree, "loess degree");
  fit->add_option("--grid", ff.grid, "voxel grid nx ny nz")->expected(3);

  auto* met = app.add_subcommand("metrics", "evaluate a fit against the truth files");
  std::string met_data, met_fit;
  met->add_option("data", met_data, "dataset directory with truth files")->required();
  met->add_option("--fit", met_fit, "fit output directory (defaults to the dataset directory)");

  auto* stu = app.add_subcommand("study", "run a replicate simulation study");
  std::string study_preset = "table1-desk";
  int replicates = 20;
  auto* study_preset_opt = stu->add_option("--preset", study_preset, "table1-desk or fig2-desk");
  auto* rep_opt = stu->add_option("--replicates", replicates, "replicates per scenario");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    json config = json::object();
    if (!g.config.empty()) config = io::read_json(g.config);
    resolve(g.threads, app.get_option("--threads"), g.threads, config, "threads");
    resolve(g.out, app.get_option("--out"), g.out, config, "out");
    resolve(g.seed, app.get_option("--seed"), g.seed, config, "seed");
    if (g.threads > 0) omp_set_num_threads(g.threads);

    if (sim->parsed()) return cmd_simulate(g, config, sf, *sim, out);
    if (fit->parsed()) return cmd_fit(g, config, ff, data_dir, *fit, out, err);
    if (met->parsed()) return cmd_metrics(g, met_data, met_fit, out);
    if (stu->parsed()) return cmd_study(g, config, study_preset, study_preset_opt, replicates, rep_opt, out, err);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IngestionError& e) {
    err << "error: " << e.what() << '\n';
    return kIngestion;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIngestion;
  } catch (const InvalidGeometryError& e) {
    err << "error: " << e.what() << '\n';
    return kIngestion;
  } catch (const DegenerateInputError& e) {
    err << "error: " << e.what() << '\n';
    return kIngestion;
  } catch (const NumericalFailureError& e) {
    err << "error: " << e.what() << " (iteration " << e.iteration() << ")\n";
    return kNumerical;
  } catch (const LinearAlgebraError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace pottsmix::cli
