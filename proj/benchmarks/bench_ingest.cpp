#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "mediaflow/ingest.hpp"
#include "mediaflow/interactions.hpp"
#include "mediaflow/media_registry.hpp"

namespace {

using namespace mediaflow;

const std::vector<std::string>& sample_lines() {
  static const std::vector<std::string> lines{
      R"({"created_at":"Sun Apr 19 10:00:01 +0000 2020","id":1,"id_str":"1","user":{"id":10,"id_str":"10","screen_name":"plain","location":"Sydney"},"entities":{"user_mentions":[],"urls":[]}})",
      R"({"created_at":"Sun Apr 19 10:00:02 +0000 2020","id":2,"id_str":"2","user":{"id":11,"id_str":"11","screen_name":"rt","location":"London, United Kingdom"},"retweeted_status":{"user":{"screen_name":"BBCBreaking"}},"entities":{"user_mentions":[{"screen_name":"BBCBreaking"}],"urls":[]}})",
      R"({"created_at":"Sun Apr 19 10:00:03 +0000 2020","id":3,"id_str":"3","user":{"id":12,"id_str":"12","screen_name":"quoter","location":"Cambridge, Massachusetts"},"quoted_status":{"user":{"screen_name":"CNN"}},"entities":{"user_mentions":[{"screen_name":"BBCBreaking"},{"screen_name":"nytimes"}],"urls":[{"expanded_url":"https://www.cnn.com/2020/a.html"}]}})",
      R"({"limit":{"track":42,"timestamp_ms":"1587290000000"}})",
  };
  return lines;
}

MediaRegistry& registry() {
  static MediaRegistry instance =
      MediaRegistry::load_json(std::string(MEDIAFLOW_FIXTURE_DIR) + "/registry.json");
  return instance;
}

void BM_ParseTweet(benchmark::State& state) {
  const auto& lines = sample_lines();
  std::size_t i = 0;
  std::uint64_t bytes = 0;
  for (auto _ : state) {
    const std::string& line = lines[i++ % lines.size()];
    auto outcome = parse_tweet(line);
    benchmark::DoNotOptimize(outcome);
    bytes += line.size();
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseTweet);

void BM_ParseAndExtract(benchmark::State& state) {
  const auto& lines = sample_lines();
  std::size_t i = 0;
  for (auto _ : state) {
    auto outcome = parse_tweet(lines[i++ % lines.size()]);
    if (const auto* rec = std::get_if<TweetRecord>(&outcome)) {
      auto events = extract_interactions(*rec, registry(), Scheme::weighted);
      benchmark::DoNotOptimize(events);
    }
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseAndExtract);

void BM_SerializeRecord(benchmark::State& state) {
  auto outcome = parse_tweet(sample_lines()[2]);
  const auto& rec = std::get<TweetRecord>(outcome);
  for (auto _ : state) {
    auto line = serialize_record(rec);
    benchmark::DoNotOptimize(line);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SerializeRecord);

}  // namespace
