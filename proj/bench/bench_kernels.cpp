// Serial reference vs OpenMP path for the cell-sweep kernels and the norm and
// selection routines built on them. Arg 0 picks the path, arg 1 the grid size.

#include <benchmark/benchmark.h>

#include "regscan/dyadic.hpp"
#include "regscan/kernels.hpp"
#include "regscan/lorentz.hpp"
#include "regscan/synth.hpp"

using namespace regscan;

namespace {

kernels::Exec exec_of(const benchmark::State& s) { return s.range(0) ? kernels::Exec::parallel : kernels::Exec::serial; }

Box3 box_of(const benchmark::State& s) {
  const int n = static_cast<int>(s.range(1));
  return Box3({-1, -1, -1}, {1, 1, 1}, {n, n, n});
}

VectorGrid spikes(const Box3& box) {
  synth::SpikeSpec spec;
  spec.spikes.push_back({{-0.5, 0.0, 0.0}, {0, 0, 1}, 0.3});
  spec.spikes.push_back({{0.5, 0.0, 0.0}, {0, 1, 0}, 0.3});
  return synth::spike_field(spec, box);
}

void label(benchmark::State& s) {
  s.SetLabel(s.range(0) ? "openmp" : "serial");
  s.SetItemsProcessed(s.iterations() * s.range(1) * s.range(1) * s.range(1));
}

void BM_power_sum(benchmark::State& s) {
  const Box3 box = box_of(s);
  const ScalarGrid f = spikes(box).magnitude();
  const Ball ball{{0, 0, 0}, 0.8};
  for (auto _ : s)
    benchmark::DoNotOptimize(kernels::power_sum(f.data(), box, CellRange::all(box), 3.0, &ball, exec_of(s)));
  label(s);
}

void BM_count_above(benchmark::State& s) {
  const Box3 box = box_of(s);
  const ScalarGrid f = spikes(box).magnitude();
  for (auto _ : s)
    benchmark::DoNotOptimize(kernels::count_above(f.data(), box, CellRange::all(box), 1.0, nullptr, exec_of(s)));
  label(s);
}

void BM_magnitude(benchmark::State& s) {
  const Box3 box = box_of(s);
  const VectorGrid u = spikes(box);
  std::vector<double> out(box.size());
  for (auto _ : s) {
    kernels::magnitude(u, out, exec_of(s));
    benchmark::ClobberMemory();
  }
  label(s);
}

void BM_sorted_abs(benchmark::State& s) {
  const Box3 box = box_of(s);
  const ScalarGrid f = spikes(box).magnitude();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::sorted_abs_descending(f.data(), exec_of(s)));
  label(s);
}

void BM_summed_area_table(benchmark::State& s) {
  const Box3 box = box_of(s);
  const ScalarGrid f = spikes(box).magnitude();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::summed_area_table(f.data(), box, 1.0, exec_of(s)));
  label(s);
}

void BM_weak_norm(benchmark::State& s) {
  const ScalarGrid f = spikes(box_of(s)).magnitude();
  for (auto _ : s) benchmark::DoNotOptimize(lorentz::weak_norm(f, 3.0, exec_of(s)));
  label(s);
}

void BM_localize(benchmark::State& s) {
  const VectorGrid u = spikes(box_of(s));
  const double M = lorentz::weak_norm(u.magnitude(), 3.0);
  dyadic::LocalizeOptions opt;
  opt.exec = exec_of(s);
  for (auto _ : s) benchmark::DoNotOptimize(dyadic::localize(u, 0.1, M, 5, opt));
  label(s);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int e : {0, 1})
    for (int n : {64, 128}) b->Args({e, n});
}

}  // namespace

BENCHMARK(BM_power_sum)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_count_above)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_magnitude)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sorted_abs)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_summed_area_table)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_weak_norm)->Apply(sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_localize)->Args({0, 64})->Args({1, 64})->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
