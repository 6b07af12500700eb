#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "ood/corpus.hpp"
#include "ood/folds.hpp"
#include "ood/kmeans.hpp"
#include "ood/runeval.hpp"

namespace {

ood::Corpus make_corpus(std::size_t groups, std::size_t n) {
  ood::TaskSpec task{"bench", ood::ShiftKind::topic, {"pro", "con"}, false};
  std::mt19937_64 gen(1);
  std::vector<ood::Instance> instances;
  instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ood::Instance instance;
    instance.id = "i" + std::to_string(i);
    instance.text = "Text.";
    instance.label = task.labels[gen() % 2];
    instance.groups[ood::ShiftKind::topic] = "g" + std::to_string(i < groups ? i : gen() % groups);
    instances.push_back(std::move(instance));
  }
  return ood::Corpus(task, std::move(instances));
}

void BM_ComposeOod(benchmark::State& state) {
  const auto corpus = make_corpus(12, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ood::compose_ood(corpus, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComposeOod)->Arg(1000)->Arg(10000);

void BM_ComposeId(benchmark::State& state) {
  const auto corpus = make_corpus(12, static_cast<std::size_t>(state.range(0)));
  const auto plan = ood::compose_ood(corpus, 0);
  for (auto _ : state) benchmark::DoNotOptimize(ood::compose_id(corpus, plan, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComposeId)->Arg(1000)->Arg(10000);

void BM_KendallTauB(benchmark::State& state) {
  std::mt19937_64 gen(2);
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (auto& v : x) v = static_cast<double>(gen() % 100);
  for (auto& v : y) v = static_cast<double>(gen() % 100);
  for (auto _ : state) benchmark::DoNotOptimize(ood::kendall_tau_b(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTauB)->RangeMultiplier(4)->Range(64, 65536)->Complexity(benchmark::oNLogN);

void BM_KMeans2(benchmark::State& state) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  const std::size_t dim = 384;
  ood::PointSet points(dim);
  std::vector<double> p(dim);
  for (int64_t i = 0; i < state.range(0); ++i) {
    for (auto& v : p) v = normal(gen) + (i % 2 ? 0.5 : 0.0);
    points.push_back(std::span<const double>(p));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ood::kmeans2(points, 0));
}
BENCHMARK(BM_KMeans2)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
