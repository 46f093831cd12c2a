#include "pottsmix/study.hpp"

#include <algorithm>
#include <map>
#include <random>

#include <omp.h>

#include "pottsmix/errors.hpp"
#include "pottsmix/metrics.hpp"

namespace pottsmix::study {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{seed, a, b};
  std::mt19937_64 rng(seq);
  return rng();
}

ReplicateMetrics evaluate(const MatrixXd& estimate, const synth::Scene& scene, const Labeling& labels) {
  ReplicateMetrics m;
  m.correlation = metrics::source_correlation(estimate, scene.true_sources);
  for (int j = 0; j < scene.geometry.num_locations(); ++j) {
    const double sse = (estimate.row(j) - scene.true_sources.row(j)).squaredNorm();
    if (scene.true_labels[scene.geometry.voxel_of(j)] != 0) {
      m.sse_active += sse;
    } else {
      m.sse_inactive += sse;
    }
  }
  const metrics::RateResult r = metrics::fp_fn_rates(labels, scene.true_labels, scene.geometry);
  m.p_fp = r.p_fp;
  m.p_fn = r.p_fn;
  return m;
}

}  // namespace

int KHatHistogram::mode() const {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()) + 1;
}

StudyResult run_study(const StudyConfig& config) {
  if (config.replicates < 1) throw ParameterError("replicates must be >= 1");
  if (config.scenarios.empty()) throw ParameterError("study has no scenarios");

  struct Job {
    int scenario;
    int clusters;
    int replicate;
  };
  std::vector<Job> jobs;
  std::vector<synth::Simulation> bases(config.scenarios.size());
  for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
    // Noise-free base simulation: scene and lead fields shared by all replicates.
    bases[s] = synth::simulate(config.scenarios[s].scenario, mix(config.seed, s, 0), 0);
    for (int j : config.scenarios[s].clusters)
      for (int r = 0; r < config.replicates; ++r) jobs.push_back({static_cast<int>(s), j, r});
  }

  std::vector<ReplicateRecord> records(jobs.size());
  const int n_jobs = static_cast<int>(jobs.size());
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < n_jobs; ++i) {
    const Job& job = jobs[i];
    const StudyScenario& sc = config.scenarios[job.scenario];
    const synth::Simulation& base = bases[job.scenario];
    ReplicateRecord& rec = records[i];
    rec.scenario = sc.scenario.name;
    rec.clusters = job.clusters;
    rec.replicate = job.replicate;
    rec.scene_seed = mix(config.seed, job.scenario, 0);
    rec.noise_seed = mix(config.seed, job.scenario, 1 + job.replicate);
    rec.fit_seed = mix(rec.noise_seed, job.clusters, 2);
    try {
      const SensorDataset data =
          synth::generate_dataset(base.scene, base.leadfields, sc.scenario.noise_fraction, rec.noise_seed);
      PipelineConfig pc = config.pipeline;
      pc.k = sc.k_fit > 0 ? sc.k_fit : sc.scenario.true_k();
      pc.clusters = job.clusters;
      pc.seed = rec.fit_seed;
      pc.smoothing = true;
      const PipelineResult res = run_pipeline(data, base.leadfields, base.scene.geometry, pc);
      rec.k_hat = res.fit.report.k_hat;
      rec.iterations = res.fit.report.iterations;
      rec.converged = res.fit.report.converged;
      rec.unsmoothed = evaluate(res.sources_raw, base.scene, res.fit.state.labels);
      rec.smoothed = evaluate(res.sources_smoothed, base.scene, res.fit.state.labels);
    } catch (const Error& e) {
      rec.failed = true;
      rec.error = e.what();
    }
  }

  StudyResult out = aggregate(records, config.scenarios);
  return out;
}

StudyResult aggregate(const std::vector<ReplicateRecord>& records, const std::vector<StudyScenario>& scenarios) {
  StudyResult out;
  out.records = records;
  for (const StudyScenario& sc : scenarios) {
    const int k = sc.k_fit > 0 ? sc.k_fit : sc.scenario.true_k();
    for (int j : sc.clusters) {
      KHatHistogram hist{sc.scenario.name, j, std::vector<int>(k, 0)};
      TableRow with{sc.scenario.name, j, true};
      TableRow without{sc.scenario.name, j, false};
      int ok = 0, failed = 0;
      for (const ReplicateRecord& r : records) {
        if (r.scenario != sc.scenario.name || r.clusters != j) continue;
        if (r.failed) {
          ++failed;
          continue;
        }
        ++ok;
        if (r.k_hat >= 1 && r.k_hat <= k) ++hist.counts[r.k_hat - 1];
        for (auto [row, m] : {std::pair<TableRow*, const ReplicateMetrics*>{&with, &r.smoothed},
                              std::pair<TableRow*, const ReplicateMetrics*>{&without, &r.unsmoothed}}) {
          row->avg_corr += m->correlation;
          row->tmse_active += m->sse_active;
          row->tmse_inactive += m->sse_inactive;
          row->p_fp += m->p_fp;
          row->p_fn += m->p_fn;
        }
      }
      for (TableRow* row : {&with, &without}) {
        row->succeeded = ok;
        row->failed = failed;
        if (ok > 0) {
          row->avg_corr /= ok;
          row->tmse_active /= ok;
          row->tmse_inactive /= ok;
          row->p_fp /= ok;
          row->p_fn /= ok;
        }
        out.rows.push_back(*row);
      }
      out.histograms.push_back(std::move(hist));
    }
  }
  return out;
}

StudyConfig preset(const std::string& name) {
  StudyConfig c;
  c.name = name;
  if (name == "table1-desk") {
    for (const char* s : {"two-state", "three-state", "four-state", "nine-state"}) {
      StudyScenario sc;
      sc.scenario = synth::preset(s);
      sc.clusters = {100, 200};
      c.scenarios.push_back(sc);
    }
    c.replicates = 20;
  } else if (name == "fig2-desk") {
    for (const std::string& s : synth::preset_names()) {
      StudyScenario sc;
      sc.scenario = synth::preset(s);
      sc.clusters = {100};
      sc.k_fit = 10;
      c.scenarios.push_back(sc);
    }
    c.replicates = 50;
  } else {
    throw ParameterError("unknown study preset '" + name + "'");
  }
  return c;
}

}  // namespace pottsmix::study
