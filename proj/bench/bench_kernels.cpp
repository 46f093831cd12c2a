#include <random>

#include <benchmark/benchmark.h>

#include "pottsmix/init.hpp"
#include "pottsmix/kernels.hpp"
#include "pottsmix/synth.hpp"

namespace {

using namespace pottsmix;

struct Fixture {
  Geometry geometry;
  MatrixXd sources;
  MatrixXd means;
  VectorXd alpha;
  Labeling labels;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    const int k = 10, t_len = 100;
    x.geometry = init::cluster_locations(synth::make_geometry(2000, {12, 12, 12}, 1), 250, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    x.sources = MatrixXd::NullaryExpr(x.geometry.num_clusters(), t_len, [&] { return normal(rng); });
    x.means = MatrixXd::NullaryExpr(k, t_len, [&] { return normal(rng); });
    x.means.row(0).setZero();
    x.alpha = VectorXd::Constant(k, 1.0);
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::vector<int> z(x.geometry.num_voxels());
    for (int& v : z) v = pick(rng);
    x.labels = Labeling(z, k);
    return x;
  }();
  return f;
}

kernels::MixtureView view(const Fixture& f) { return {&f.geometry, &f.sources, &f.means, &f.alpha}; }

void BM_ScoresSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::voxel_data_scores(view(f)));
}

void BM_ScoresOmp(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::voxel_data_scores(view(f)));
}

void BM_SweepSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  const MatrixXd scores = kernels::serial::voxel_data_scores(view(f));
  for (auto _ : state) {
    Labeling z = f.labels;
    kernels::serial::sweep_color(z, scores, 0.5, f.geometry, Color::black);
    kernels::serial::sweep_color(z, scores, 0.5, f.geometry, Color::white);
    benchmark::DoNotOptimize(z);
  }
}

void BM_SweepOmp(benchmark::State& state) {
  const Fixture& f = fixture();
  const MatrixXd scores = kernels::serial::voxel_data_scores(view(f));
  for (auto _ : state) {
    Labeling z = f.labels;
    kernels::omp::sweep_color(z, scores, 0.5, f.geometry, Color::black);
    kernels::omp::sweep_color(z, scores, 0.5, f.geometry, Color::white);
    benchmark::DoNotOptimize(z);
  }
}

}  // namespace

BENCHMARK(BM_ScoresSerial);
BENCHMARK(BM_ScoresOmp);
BENCHMARK(BM_SweepSerial);
BENCHMARK(BM_SweepOmp);
BENCHMARK_MAIN();
