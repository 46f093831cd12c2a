#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pottsmix/pipeline.hpp"
#include "pottsmix/synth.hpp"

namespace pottsmix::study {

struct StudyScenario {
  synth::ScenarioConfig scenario;
  std::vector<int> clusters{100};  // one block of replicates per J value
  int k_fit = 0;                   // 0 fits with the scenario's true K
};

struct StudyConfig {
  std::string name = "custom";
  std::vector<StudyScenario> scenarios;
  int replicates = 20;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the OpenMP default
  PipelineConfig pipeline;  // k, clusters and seed are set per replicate
};

/// Per-replicate outcome for one smoothing setting.
struct ReplicateMetrics {
  double correlation = 0.0;
  double sse_active = 0.0;    // sum over active locations and times of squared error
  double sse_inactive = 0.0;
  double p_fp = 0.0;
  double p_fn = 0.0;
};

struct ReplicateRecord {
  std::string scenario;
  int clusters = 0;
  int replicate = 0;
  std::uint64_t scene_seed = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t fit_seed = 0;
  bool failed = false;
  std::string error;
  int k_hat = 0;
  int iterations = 0;
  bool converged = false;
  ReplicateMetrics smoothed;
  ReplicateMetrics unsmoothed;
};

struct TableRow {
  std::string scenario;
  int clusters = 0;
  bool smoothing = false;
  double avg_corr = 0.0;
  double tmse_active = 0.0;
  double tmse_inactive = 0.0;
  double p_fp = 0.0;
  double p_fn = 0.0;
  int succeeded = 0;
  int failed = 0;
};

struct KHatHistogram {
  std::string scenario;
  int clusters = 0;
  std::vector<int> counts;  // counts[k - 1] for k = 1..K

  /// Smallest k with the largest count.
  int mode() const;
};

struct StudyResult {
  std::vector<TableRow> rows;
  std::vector<KHatHistogram> histograms;
  std::vector<ReplicateRecord> records;
};

/// Runs every (scenario, J) block. The scene and lead fields of a scenario
/// are fixed; replicates differ only in sensor noise and fit seeds.
/// Replicates run concurrently and results do not depend on thread count.
StudyResult run_study(const StudyConfig& config);

/// Rows and histograms from replicate records (failed ones excluded).
StudyResult aggregate(const std::vector<ReplicateRecord>& records, const std::vector<StudyScenario>& scenarios);

/// "table1-desk" (K = true K, J in {100, 200}) and "fig2-desk" (K = 10,
/// every scenario in both separation variants).
StudyConfig preset(const std::string& name);

}  // namespace pottsmix::study
