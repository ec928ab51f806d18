#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "tsr/grid.hpp"
#include "tsr/matching.hpp"
#include "tsr/metrics.hpp"
#include "tsr/separators.hpp"
#include "tsr/synth.hpp"

using namespace tsr;

namespace {

std::vector<Separator> bands(int count, int along, double extent, Axis axis = Axis::Row) {
  std::vector<Separator> out;
  const auto xs = canonical_positions(along, 15);
  for (int i = 0; i < count; ++i) {
    const double c = (i + 1) * extent / (count + 1);
    out.push_back(straight_separator(axis, xs, c - 3, c, c + 3));
  }
  return out;
}

void BM_PriorEnhancedMatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto gts = bands(n, 1024, 1024);
  std::mt19937_64 rng(1);
  std::vector<double> refs(static_cast<std::size_t>(n));
  for (auto& r : refs) r = std::uniform_real_distribution<double>(0, 1024)(rng);
  for (auto _ : state) benchmark::DoNotOptimize(prior_enhanced_match(refs, gts, 256));
  state.SetComplexityN(n);
}
BENCHMARK(BM_PriorEnhancedMatch)->RangeMultiplier(2)->Range(4, 128)->Complexity();

void BM_DetectPeaks(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (auto& x : s) x = std::uniform_real_distribution<double>(0, 1)(rng);
  for (auto _ : state) benchmark::DoNotOptimize(detect_peaks(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DetectPeaks)->Arg(256)->Arg(1024)->Arg(4096);

void BM_TreeEditDistance(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto a = oracle::random_tree(rng, static_cast<int>(state.range(0)));
  const auto b = oracle::random_tree(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tree_edit_distance(a, b));
}
BENCHMARK(BM_TreeEditDistance)->Arg(16)->Arg(64)->Arg(256);

void BM_BuildGrid(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ImageSize size{1024, 1024};
  const auto rows = bands(n, size.width, size.height);
  const auto cols = bands(n, size.height, size.width, Axis::Column);
  for (auto _ : state) benchmark::DoNotOptimize(build_grid(rows, cols, size));
}
BENCHMARK(BM_BuildGrid)->Arg(5)->Arg(20)->Arg(50);

void BM_GenerateTable(benchmark::State& state) {
  const auto spec = random_spec(7, 1.0, 0.5, {192, 256});
  for (auto _ : state) benchmark::DoNotOptimize(generate_table(spec));
}
BENCHMARK(BM_GenerateTable)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
