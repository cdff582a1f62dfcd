#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "mediaflow/geoparse.hpp"

namespace {

using namespace mediaflow;

const Gazetteer& gazetteer() {
  static Gazetteer instance =
      Gazetteer::load_csv(std::string(MEDIAFLOW_FIXTURE_DIR) + "/gazetteer.csv",
                          std::string(MEDIAFLOW_FIXTURE_DIR) + "/aliases.csv");
  return instance;
}

const std::vector<std::string>& descriptions() {
  static const std::vector<std::string> list{
      "Cambridge, Massachusetts", "Cambridge",    "Ilinois",
      "somewhere over the rainbow", "Sydney",     "London, UK",
      "Paris, France",            "",             "Toronto | Canada",
  };
  return list;
}

void BM_ParseLocation(benchmark::State& state) {
  const auto& g = gazetteer();
  std::size_t i = 0;
  for (auto _ : state) {
    auto resolution = parse_location(descriptions()[i++ % descriptions().size()], g);
    benchmark::DoNotOptimize(resolution);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseLocation);

void BM_ParseLocationMemoized(benchmark::State& state) {
  const auto& g = gazetteer();
  LocationResolver resolver(g);
  std::size_t i = 0;
  for (auto _ : state) {
    auto resolution = resolver.resolve(descriptions()[i++ % descriptions().size()]);
    benchmark::DoNotOptimize(resolution);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseLocationMemoized);

}  // namespace
