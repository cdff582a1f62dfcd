#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mediaflow/clustering.hpp"

namespace {

using namespace mediaflow;

std::vector<Point> blob_points(std::size_t n, std::size_t dims) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<Point> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point p(dims, 0.0);
    p[i % dims] = 1.0;
    for (double& v : p) v += noise(rng);
    points.push_back(std::move(p));
  }
  return points;
}

void BM_KMeans(benchmark::State& state) {
  const auto points = blob_points(static_cast<std::size_t>(state.range(0)), 7);
  const int k = static_cast<int>(state.range(1));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto c = kmeans(points, k, seed++);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Args({300, 3})->Args({1000, 7})->Args({5000, 25});

void BM_Silhouette(benchmark::State& state) {
  const auto points = blob_points(static_cast<std::size_t>(state.range(0)), 7);
  auto c = kmeans(points, 7, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(silhouette_mean(points, c));
  }
}
BENCHMARK(BM_Silhouette)->Arg(300)->Arg(1000);

}  // namespace
