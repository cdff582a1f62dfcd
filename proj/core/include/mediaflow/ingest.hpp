#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mediaflow {

// One parsed tweet, reduced to the fields the pipeline consumes. A retweet
// of a quote carries both retweeted_account and quoted_account.
struct TweetRecord {
  std::string tweet_id;
  std::string author_id;
  std::string author_handle;
  std::string author_description;  // free-text location field of the profile
  std::string created_at;
  bool is_retweet = false;
  bool is_quote = false;
  std::optional<std::string> reply_target;
  std::vector<std::string> mentioned_accounts;  // source order, duplicates kept
  std::optional<std::string> retweeted_account;
  std::optional<std::string> quoted_account;
  std::vector<std::string> shared_urls;

  bool operator==(const TweetRecord&) const = default;
};

// Streaming-API message carrying the cumulative count of undelivered tweets
// since the connection was established.
struct LimitNotice {
  std::int64_t timestamp_ms = 0;
  std::int64_t cumulative_undelivered = 0;

  bool operator==(const LimitNotice&) const = default;
};

enum class SkipReason {
  malformed,            // not valid JSON
  limit_notice,         // rate-limit notice, feeds the sampling estimator
  connection_boundary,  // explicit sentinel between stream connections
  not_a_tweet,          // valid JSON without tweet id/user (e.g. delete events)
};

struct Skipped {
  SkipReason reason;
  std::optional<LimitNotice> notice;  // set when reason == limit_notice
};

using ParseOutcome = std::variant<TweetRecord, Skipped>;

// Total over all inputs: every line yields a record or a Skipped, never throws.
ParseOutcome parse_tweet(std::string_view json_line);

// Compact single-line JSON for a record; parse_tweet_json reverses it.
std::string serialize_record(const TweetRecord& record);

// Notices from one streaming connection, sorted by timestamp.
struct NoticeSequence {
  std::vector<LimitNotice> notices;
};

struct SamplingSegment {
  std::int64_t start_ms = 0;  // previous notice (or connection start)
  std::int64_t end_ms = 0;
  std::uint64_t undelivered = 0;
};

struct SamplingReport {
  std::uint64_t delivered = 0;
  std::uint64_t undelivered = 0;
  double rate = 1.0;  // delivered / (delivered + undelivered)
  std::vector<SamplingSegment> segments;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per connection: the first notice contributes its full cumulative count, each
// following notice contributes the difference to its predecessor. A decreasing
// cumulative count means an undeclared connection boundary and throws.
SamplingReport estimate_sampling_rate(std::uint64_t delivered,
                                      std::span<const NoticeSequence> connections);
SamplingReport estimate_sampling_rate(std::uint64_t delivered,
                                      std::span<const LimitNotice> notices);

std::string sampling_report_json(const SamplingReport& report);

// Reads lines from a plain or gzip-compressed file (dispatch on ".gz").
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(LineReader&&) noexcept;
  LineReader& operator=(LineReader&&) noexcept;

  // Returns false at end of stream.
  bool next(std::string& line);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct StreamCounts {
  std::uint64_t lines = 0;
  std::uint64_t records = 0;
  std::uint64_t skipped_malformed = 0;
  std::uint64_t skipped_notices = 0;
  std::uint64_t skipped_boundaries = 0;
  std::uint64_t skipped_other = 0;
};

// Scans a tweet stream with `workers` parsing threads. `sink(record, shard)`
// is called from worker threads with shard in [0, workers); callers keep
// per-shard state and merge afterwards. Notices come back in stream order,
// split into connection segments at boundary sentinels.
StreamCounts scan_tweet_stream(
    const std::filesystem::path& path, int workers,
    const std::function<void(TweetRecord&&, int shard)>& sink,
    std::vector<NoticeSequence>* notices_out = nullptr);

// Same parallel parse, but outcomes reach the sink in input order (from a
// single collector thread), for stages whose outputs must be byte-stable.
StreamCounts scan_tweet_stream_ordered(const std::filesystem::path& path, int workers,
                                       const std::function<void(ParseOutcome&&)>& sink);

}  // namespace mediaflow
