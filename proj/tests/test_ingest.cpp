#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "mediaflow/ingest.hpp"

using namespace mediaflow;

namespace {
const std::filesystem::path kFixtures = MEDIAFLOW_FIXTURE_DIR;
}

TEST_CASE("parse_tweet sets both flags when retweeted and quoted status present") {
  const char* line = R"({"id_str":"1","user":{"id_str":"9","screen_name":"u","location":"x"},
    "retweeted_status":{"user":{"screen_name":"orig"}},
    "quoted_status":{"user":{"screen_name":"quoted"}},
    "entities":{"user_mentions":[],"urls":[]}})";
  auto outcome = parse_tweet(line);
  const auto& rec = std::get<TweetRecord>(outcome);
  CHECK(rec.is_retweet);
  CHECK(rec.is_quote);
  CHECK(rec.retweeted_account == "orig");
  CHECK(rec.quoted_account == "quoted");
}

TEST_CASE("parse_tweet with no activity attributes yields all-false flags and empty lists") {
  const char* line =
      R"({"id_str":"2","user":{"id_str":"9","screen_name":"u","location":""},"entities":{"user_mentions":[],"urls":[]}})";
  auto outcome = parse_tweet(line);
  const auto& rec = std::get<TweetRecord>(outcome);
  CHECK_FALSE(rec.is_retweet);
  CHECK_FALSE(rec.is_quote);
  CHECK_FALSE(rec.reply_target.has_value());
  CHECK(rec.mentioned_accounts.empty());
  CHECK(rec.shared_urls.empty());
}

TEST_CASE("parse_tweet keeps mention order and duplicates") {
  const char* line =
      R"({"id_str":"3","user":{"id_str":"9"},"entities":{"user_mentions":[{"screen_name":"a"},{"screen_name":"b"},{"screen_name":"a"}]}})";
  auto outcome = parse_tweet(line);
  const auto& rec = std::get<TweetRecord>(outcome);
  CHECK(rec.mentioned_accounts == std::vector<std::string>{"a", "b", "a"});
}

TEST_CASE("parse_tweet skips limit notices with the cumulative count attached") {
  auto outcome = parse_tweet(R"({"limit":{"track":42,"timestamp_ms":"1587290000000"}})");
  const auto& skipped = std::get<Skipped>(outcome);
  CHECK(skipped.reason == SkipReason::limit_notice);
  REQUIRE(skipped.notice.has_value());
  CHECK(skipped.notice->cumulative_undelivered == 42);
  CHECK(skipped.notice->timestamp_ms == 1587290000000);
}

TEST_CASE("parse_tweet is total over dirty input") {
  CHECK(std::get<Skipped>(parse_tweet("{broken")).reason == SkipReason::malformed);
  CHECK(std::get<Skipped>(parse_tweet("")).reason == SkipReason::malformed);
  CHECK(std::get<Skipped>(parse_tweet("[1,2]")).reason == SkipReason::malformed);
  CHECK(std::get<Skipped>(parse_tweet(R"({"delete":{"status":{"id":1}}})")).reason ==
        SkipReason::not_a_tweet);
  CHECK(std::get<Skipped>(parse_tweet(R"({"connection_boundary":true})")).reason ==
        SkipReason::connection_boundary);
}

TEST_CASE("12-line fixture yields 10 records and 2 malformed skips") {
  LineReader reader(kFixtures / "tweets12.ndjson");
  std::string line;
  int records = 0, malformed = 0, other = 0, lines = 0;
  while (reader.next(line)) {
    ++lines;
    auto outcome = parse_tweet(line);
    if (std::holds_alternative<TweetRecord>(outcome)) {
      ++records;
    } else if (std::get<Skipped>(outcome).reason == SkipReason::malformed) {
      ++malformed;
    } else {
      ++other;
    }
  }
  CHECK(lines == 12);
  CHECK(records == 10);
  CHECK(malformed == 2);
  CHECK(other == 0);
  CHECK(records + malformed + other == lines);  // parsing is total
}

TEST_CASE("record serialization round-trips") {
  TweetRecord rec;
  rec.tweet_id = "77";
  rec.author_id = "5";
  rec.author_handle = "someone";
  rec.author_description = "Cambridge, Massachusetts";
  rec.created_at = "Sun Apr 19 10:00:01 +0000 2020";
  rec.is_retweet = true;
  rec.retweeted_account = "orig";
  rec.is_quote = true;
  rec.quoted_account = "q";
  rec.reply_target = "r";
  rec.mentioned_accounts = {"a", "a", "b"};
  rec.shared_urls = {"https://x.example/1", "https://y.example/2"};

  auto once = std::get<TweetRecord>(parse_tweet(serialize_record(rec)));
  CHECK(once == rec);
  // idempotent: serialize(parse(serialize(r))) == serialize(r)
  CHECK(serialize_record(once) == serialize_record(rec));
}

TEST_CASE("sampling rate from two notices matches the arithmetic oracle") {
  std::vector<LimitNotice> notices{{1000, 40}, {2000, 100}};
  auto report = estimate_sampling_rate(900, notices);
  CHECK(report.undelivered == 100);  // 40 + (100 - 40)
  CHECK(report.rate == doctest::Approx(0.90).epsilon(1e-12));
  REQUIRE(report.segments.size() == 2);
  CHECK(report.segments[0].undelivered == 40);
  CHECK(report.segments[1].undelivered == 60);
}

TEST_CASE("sampling rate is 1.0 with no notices") {
  auto report = estimate_sampling_rate(500, std::span<const LimitNotice>{});
  CHECK(report.rate == 1.0);
  CHECK(report.undelivered == 0);
}

TEST_CASE("decreasing cumulative counts require a declared boundary") {
  std::vector<LimitNotice> notices{{1000, 50}, {2000, 10}};
  CHECK_THROWS_AS(estimate_sampling_rate(100, notices), SamplingError);

  // declared as two connections, the same counts are fine
  std::vector<NoticeSequence> connections{{{{1000, 50}}}, {{{2000, 10}}}};
  auto report = estimate_sampling_rate(100, connections);
  CHECK(report.undelivered == 60);
}

TEST_CASE("sampling rate is invariant under segment splitting") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LimitNotice> notices;
    std::int64_t cumulative = 0;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      cumulative += static_cast<std::int64_t>(rng() % 100);
      notices.push_back({i * 10, cumulative});
    }
    auto whole = estimate_sampling_rate(1000, notices);

    std::uint64_t summed = 0;
    for (const auto& segment : whole.segments) summed += segment.undelivered;
    CHECK(summed == whole.undelivered);
    CHECK(whole.undelivered == static_cast<std::uint64_t>(cumulative));
  }
}

TEST_CASE("scan_tweet_stream counts and orders notices across connections") {
  auto path = std::filesystem::temp_directory_path() / "mediaflow_scan_test.ndjson";
  {
    std::ofstream out(path);
    out << R"({"id_str":"1","user":{"id_str":"u1"}})" << "\n";
    out << R"({"limit":{"track":5,"timestamp_ms":"100"}})" << "\n";
    out << R"({"limit":{"track":9,"timestamp_ms":"200"}})" << "\n";
    out << R"({"connection_boundary":true})" << "\n";
    out << R"({"limit":{"track":3,"timestamp_ms":"300"}})" << "\n";
    out << "garbage\n";
    out << R"({"id_str":"2","user":{"id_str":"u2"}})" << "\n";
  }
  std::vector<NoticeSequence> connections;
  std::atomic<int> seen{0};
  auto counts = scan_tweet_stream(
      path, 2, [&](TweetRecord&&, int) { seen.fetch_add(1); }, &connections);
  CHECK(counts.lines == 7);
  CHECK(counts.records == 2);
  CHECK(seen.load() == 2);
  CHECK(counts.skipped_malformed == 1);
  CHECK(counts.skipped_notices == 3);
  CHECK(counts.skipped_boundaries == 1);
  REQUIRE(connections.size() == 2);
  CHECK(connections[0].notices.size() == 2);
  CHECK(connections[1].notices.size() == 1);
  auto report = estimate_sampling_rate(counts.records, connections);
  CHECK(report.undelivered == 12);  // 5 + 4 from the first connection, 3 from the second
  std::filesystem::remove(path);
}

TEST_CASE("LineReader handles gzip input") {
  namespace fs = std::filesystem;
  auto plain = fs::temp_directory_path() / "mediaflow_gz_test.txt";
  auto gz = fs::temp_directory_path() / "mediaflow_gz_test.txt.gz";
  {
    std::ofstream out(plain);
    out << "alpha\nbeta\ngamma\n";
  }
  REQUIRE(std::system(("gzip -kf " + plain.string()).c_str()) == 0);
  LineReader reader(gz);
  std::string line;
  std::vector<std::string> lines;
  while (reader.next(line)) lines.push_back(line);
  CHECK(lines == std::vector<std::string>{"alpha", "beta", "gamma"});
  fs::remove(plain);
  fs::remove(gz);
}
