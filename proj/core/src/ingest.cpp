#include "mediaflow/ingest.hpp"

#include <zlib.h>

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

namespace mediaflow {

using nlohmann::json;

namespace {

std::string id_string(const json& obj, const char* str_key, const char* int_key) {
  if (auto it = obj.find(str_key); it != obj.end() && it->is_string()) {
    return it->get<std::string>();
  }
  if (auto it = obj.find(int_key); it != obj.end() && it->is_number_integer()) {
    return std::to_string(it->get<std::int64_t>());
  }
  return {};
}

std::string string_or_empty(const json& obj, const char* key) {
  if (auto it = obj.find(key); it != obj.end() && it->is_string()) {
    return it->get<std::string>();
  }
  return {};
}

std::optional<std::string> screen_name_of(const json& status) {
  if (auto it = status.find("user"); it != status.end() && it->is_object()) {
    std::string name = string_or_empty(*it, "screen_name");
    if (!name.empty()) return name;
  }
  return std::nullopt;
}

std::optional<LimitNotice> parse_limit(const json& obj) {
  auto it = obj.find("limit");
  if (it == obj.end() || !it->is_object()) return std::nullopt;
  LimitNotice notice;
  if (auto track = it->find("track"); track != it->end() && track->is_number()) {
    notice.cumulative_undelivered = track->get<std::int64_t>();
  } else {
    return std::nullopt;
  }
  if (auto ts = it->find("timestamp_ms"); ts != it->end()) {
    if (ts->is_string()) {
      notice.timestamp_ms = std::strtoll(ts->get<std::string>().c_str(), nullptr, 10);
    } else if (ts->is_number()) {
      notice.timestamp_ms = ts->get<std::int64_t>();
    }
  }
  return notice;
}

}  // namespace

ParseOutcome parse_tweet(std::string_view json_line) {
  json obj = json::parse(json_line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) {
    return Skipped{SkipReason::malformed, std::nullopt};
  }
  if (auto notice = parse_limit(obj)) {
    return Skipped{SkipReason::limit_notice, notice};
  }
  if (obj.contains("connection_boundary")) {
    return Skipped{SkipReason::connection_boundary, std::nullopt};
  }

  auto user_it = obj.find("user");
  std::string tweet_id = id_string(obj, "id_str", "id");
  if (tweet_id.empty() || user_it == obj.end() || !user_it->is_object()) {
    return Skipped{SkipReason::not_a_tweet, std::nullopt};
  }
  const json& user = *user_it;

  TweetRecord rec;
  rec.tweet_id = std::move(tweet_id);
  rec.author_id = id_string(user, "id_str", "id");
  rec.author_handle = string_or_empty(user, "screen_name");
  rec.author_description = string_or_empty(user, "location");
  rec.created_at = string_or_empty(obj, "created_at");

  if (auto it = obj.find("retweeted_status"); it != obj.end() && it->is_object()) {
    rec.is_retweet = true;
    rec.retweeted_account = screen_name_of(*it);
  }
  if (auto it = obj.find("quoted_status"); it != obj.end() && it->is_object()) {
    rec.is_quote = true;
    rec.quoted_account = screen_name_of(*it);
  }
  // Prefer the handle; fall back to the numeric id when only it is present.
  std::string reply_handle = string_or_empty(obj, "in_reply_to_screen_name");
  if (!reply_handle.empty()) {
    rec.reply_target = std::move(reply_handle);
  } else {
    std::string reply_id = id_string(obj, "in_reply_to_user_id_str", "in_reply_to_user_id");
    if (!reply_id.empty()) rec.reply_target = std::move(reply_id);
  }

  if (auto ent = obj.find("entities"); ent != obj.end() && ent->is_object()) {
    if (auto mentions = ent->find("user_mentions");
        mentions != ent->end() && mentions->is_array()) {
      for (const auto& m : *mentions) {
        if (!m.is_object()) continue;
        std::string name = string_or_empty(m, "screen_name");
        if (!name.empty()) rec.mentioned_accounts.push_back(std::move(name));
      }
    }
    if (auto urls = ent->find("urls"); urls != ent->end() && urls->is_array()) {
      for (const auto& u : *urls) {
        if (!u.is_object()) continue;
        std::string expanded = string_or_empty(u, "expanded_url");
        if (expanded.empty()) expanded = string_or_empty(u, "url");
        if (!expanded.empty()) rec.shared_urls.push_back(std::move(expanded));
      }
    }
  }
  return rec;
}

std::string serialize_record(const TweetRecord& record) {
  json entities{{"user_mentions", json::array()}, {"urls", json::array()}};
  for (const auto& m : record.mentioned_accounts) {
    entities["user_mentions"].push_back({{"screen_name", m}});
  }
  for (const auto& u : record.shared_urls) {
    entities["urls"].push_back({{"expanded_url", u}});
  }

  json obj{
      {"id_str", record.tweet_id},
      {"created_at", record.created_at},
      {"user",
       {{"id_str", record.author_id},
        {"screen_name", record.author_handle},
        {"location", record.author_description}}},
      {"entities", entities},
  };
  if (record.is_retweet) {
    obj["retweeted_status"] =
        record.retweeted_account
            ? json{{"user", {{"screen_name", *record.retweeted_account}}}}
            : json{{"user", json::object()}};
  }
  if (record.is_quote) {
    obj["quoted_status"] =
        record.quoted_account
            ? json{{"user", {{"screen_name", *record.quoted_account}}}}
            : json{{"user", json::object()}};
  }
  if (record.reply_target) obj["in_reply_to_screen_name"] = *record.reply_target;
  return obj.dump();
}

SamplingReport estimate_sampling_rate(std::uint64_t delivered,
                                      std::span<const NoticeSequence> connections) {
  SamplingReport report;
  report.delivered = delivered;
  for (const auto& connection : connections) {
    std::int64_t previous = 0;
    std::int64_t previous_ts = 0;
    bool first = true;
    for (const auto& notice : connection.notices) {
      if (!first && notice.cumulative_undelivered < previous) {
        throw SamplingError(
            "cumulative undelivered count decreased (" + std::to_string(previous) +
            " -> " + std::to_string(notice.cumulative_undelivered) +
            "): a connection boundary must be declared");
      }
      SamplingSegment segment;
      segment.start_ms = first ? notice.timestamp_ms : previous_ts;
      segment.end_ms = notice.timestamp_ms;
      segment.undelivered =
          static_cast<std::uint64_t>(notice.cumulative_undelivered - (first ? 0 : previous));
      report.segments.push_back(segment);
      report.undelivered += segment.undelivered;
      previous = notice.cumulative_undelivered;
      previous_ts = notice.timestamp_ms;
      first = false;
    }
  }
  const std::uint64_t total = report.delivered + report.undelivered;
  report.rate = total == 0 ? 1.0
                           : static_cast<double>(report.delivered) / static_cast<double>(total);
  if (report.undelivered == 0) report.rate = 1.0;
  return report;
}

SamplingReport estimate_sampling_rate(std::uint64_t delivered,
                                      std::span<const LimitNotice> notices) {
  NoticeSequence seq;
  seq.notices.assign(notices.begin(), notices.end());
  return estimate_sampling_rate(delivered, std::span<const NoticeSequence>(&seq, 1));
}

std::string sampling_report_json(const SamplingReport& report) {
  json segments = json::array();
  for (const auto& s : report.segments) {
    segments.push_back({{"start_ms", s.start_ms},
                        {"end_ms", s.end_ms},
                        {"undelivered", s.undelivered}});
  }
  json obj{{"delivered", report.delivered},
           {"undelivered", report.undelivered},
           {"rate", report.rate},
           {"segments", segments}};
  return obj.dump(2);
}

// ---------------------------------------------------------------------------
// Line reading
// ---------------------------------------------------------------------------

struct LineReader::Impl {
  std::ifstream plain;
  gzFile gz = nullptr;
  std::string gz_buffer;

  ~Impl() {
    if (gz) gzclose(gz);
  }
};

LineReader::LineReader(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  if (path.extension() == ".gz") {
    impl_->gz = gzopen(path.string().c_str(), "rb");
    if (!impl_->gz) throw std::runtime_error("cannot open gzip file: " + path.string());
    gzbuffer(impl_->gz, 1 << 20);
  } else {
    impl_->plain.open(path, std::ios::binary);
    if (!impl_->plain) throw std::runtime_error("cannot open file: " + path.string());
  }
}

LineReader::~LineReader() = default;
LineReader::LineReader(LineReader&&) noexcept = default;
LineReader& LineReader::operator=(LineReader&&) noexcept = default;

bool LineReader::next(std::string& line) {
  if (impl_->gz) {
    line.clear();
    char buf[1 << 14];
    for (;;) {
      if (gzgets(impl_->gz, buf, sizeof(buf)) == nullptr) {
        return !line.empty();
      }
      line += buf;
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      // long line: keep appending
    }
  }
  if (!std::getline(impl_->plain, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

// ---------------------------------------------------------------------------
// Parallel stream scan
// ---------------------------------------------------------------------------

namespace {

// One blob per chunk instead of one allocation per line keeps the reader and
// worker threads out of each other's malloc arenas.
struct Chunk {
  std::uint64_t index = 0;
  std::string blob;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> spans;  // offset, length

  std::size_t size() const { return spans.size(); }
  std::string_view line(std::size_t i) const {
    return std::string_view(blob).substr(spans[i].first, spans[i].second);
  }
  void add(std::string_view text) {
    spans.emplace_back(static_cast<std::uint32_t>(blob.size()),
                       static_cast<std::uint32_t>(text.size()));
    blob += text;
  }
  void clear() {
    blob.clear();
    spans.clear();
  }
};

// Notices and boundaries found in one chunk, in line order.
struct ChunkNotices {
  std::vector<std::pair<std::uint32_t, LimitNotice>> notices;  // line offset, notice
  std::vector<std::uint32_t> boundaries;                       // line offsets
};

class ChunkQueue {
 public:
  explicit ChunkQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(Chunk&& chunk) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return queue_.size() < capacity_; });
    queue_.push_back(std::move(chunk));
    not_empty_.notify_one();
  }

  bool pop(Chunk& out) {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !queue_.empty() || done_; });
    if (queue_.empty()) return false;
    out = std::move(queue_.front());
    queue_.pop_front();
    not_full_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard lock(mu_);
    done_ = true;
    not_empty_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<Chunk> queue_;
  std::size_t capacity_;
  bool done_ = false;
};

// Reassembles notices in stream order and splits them into connections at
// boundary sentinels; chunk_notices is keyed by chunk index.
void collect_notices(std::vector<NoticeSequence>& notices_out,
                     const std::map<std::uint64_t, ChunkNotices>& chunk_notices) {
  notices_out.clear();
  notices_out.push_back(NoticeSequence{});
  for (const auto& [chunk_index, found] : chunk_notices) {
    std::size_t notice_pos = 0;
    std::size_t boundary_pos = 0;
    while (notice_pos < found.notices.size() || boundary_pos < found.boundaries.size()) {
      bool take_boundary =
          boundary_pos < found.boundaries.size() &&
          (notice_pos >= found.notices.size() ||
           found.boundaries[boundary_pos] < found.notices[notice_pos].first);
      if (take_boundary) {
        if (!notices_out.back().notices.empty()) {
          notices_out.push_back(NoticeSequence{});
        }
        ++boundary_pos;
      } else {
        notices_out.back().notices.push_back(found.notices[notice_pos].second);
        ++notice_pos;
      }
    }
  }
  if (notices_out.back().notices.empty()) notices_out.pop_back();
}

}  // namespace

namespace {

// workers == 1 runs everything inline on the calling thread; the baseline a
// worker-count speedup is measured against.
StreamCounts scan_inline(const std::filesystem::path& path,
                         const std::function<void(ParseOutcome&&)>& sink) {
  StreamCounts counts;
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    ++counts.lines;
    ParseOutcome outcome = parse_tweet(line);
    if (std::holds_alternative<TweetRecord>(outcome)) {
      ++counts.records;
    } else {
      switch (std::get<Skipped>(outcome).reason) {
        case SkipReason::malformed: ++counts.skipped_malformed; break;
        case SkipReason::limit_notice: ++counts.skipped_notices; break;
        case SkipReason::connection_boundary: ++counts.skipped_boundaries; break;
        case SkipReason::not_a_tweet: ++counts.skipped_other; break;
      }
    }
    sink(std::move(outcome));
  }
  return counts;
}

}  // namespace

StreamCounts scan_tweet_stream(const std::filesystem::path& path, int workers,
                               const std::function<void(TweetRecord&&, int)>& sink,
                               std::vector<NoticeSequence>* notices_out) {
  if (workers <= 1) {
    std::vector<NoticeSequence> connections{NoticeSequence{}};
    StreamCounts counts = scan_inline(path, [&](ParseOutcome&& outcome) {
      if (auto* rec = std::get_if<TweetRecord>(&outcome)) {
        sink(std::move(*rec), 0);
        return;
      }
      const Skipped& skipped = std::get<Skipped>(outcome);
      if (skipped.reason == SkipReason::limit_notice) {
        connections.back().notices.push_back(*skipped.notice);
      } else if (skipped.reason == SkipReason::connection_boundary &&
                 !connections.back().notices.empty()) {
        connections.push_back(NoticeSequence{});
      }
    });
    if (notices_out) {
      if (connections.back().notices.empty()) connections.pop_back();
      *notices_out = std::move(connections);
    }
    return counts;
  }
  constexpr std::size_t kChunkLines = 2048;
  constexpr std::size_t kChunkBytes = 1 << 20;

  ChunkQueue queue(static_cast<std::size_t>(workers) * 4);
  std::vector<StreamCounts> per_worker(static_cast<std::size_t>(workers));
  std::mutex notices_mu;
  std::map<std::uint64_t, ChunkNotices> chunk_notices;

  auto worker_fn = [&](int shard) {
    StreamCounts& counts = per_worker[static_cast<std::size_t>(shard)];
    Chunk chunk;
    while (queue.pop(chunk)) {
      ChunkNotices local;
      for (std::uint32_t i = 0; i < chunk.size(); ++i) {
        ++counts.lines;
        ParseOutcome outcome = parse_tweet(chunk.line(i));
        if (auto* rec = std::get_if<TweetRecord>(&outcome)) {
          ++counts.records;
          sink(std::move(*rec), shard);
          continue;
        }
        const Skipped& skipped = std::get<Skipped>(outcome);
        switch (skipped.reason) {
          case SkipReason::malformed: ++counts.skipped_malformed; break;
          case SkipReason::limit_notice:
            ++counts.skipped_notices;
            local.notices.emplace_back(i, *skipped.notice);
            break;
          case SkipReason::connection_boundary:
            ++counts.skipped_boundaries;
            local.boundaries.push_back(i);
            break;
          case SkipReason::not_a_tweet: ++counts.skipped_other; break;
        }
      }
      if (!local.notices.empty() || !local.boundaries.empty()) {
        std::lock_guard lock(notices_mu);
        chunk_notices[chunk.index] = std::move(local);
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker_fn, w);

  {
    LineReader reader(path);
    Chunk chunk;
    chunk.blob.reserve(kChunkBytes + 4096);
    chunk.spans.reserve(kChunkLines);
    std::string line;
    std::uint64_t index = 0;
    while (reader.next(line)) {
      chunk.add(line);
      if (chunk.size() >= kChunkLines || chunk.blob.size() >= kChunkBytes) {
        chunk.index = index++;
        queue.push(std::move(chunk));
        chunk = Chunk{};
        chunk.blob.reserve(kChunkBytes + 4096);
        chunk.spans.reserve(kChunkLines);
      }
    }
    if (chunk.size() > 0) {
      chunk.index = index++;
      queue.push(std::move(chunk));
    }
  }
  queue.close();
  for (auto& t : threads) t.join();

  StreamCounts total;
  for (const auto& c : per_worker) {
    total.lines += c.lines;
    total.records += c.records;
    total.skipped_malformed += c.skipped_malformed;
    total.skipped_notices += c.skipped_notices;
    total.skipped_boundaries += c.skipped_boundaries;
    total.skipped_other += c.skipped_other;
  }

  if (notices_out) {
    collect_notices(*notices_out, chunk_notices);
  }
  return total;
}

StreamCounts scan_tweet_stream_ordered(const std::filesystem::path& path, int workers,
                                       const std::function<void(ParseOutcome&&)>& sink) {
  if (workers <= 1) return scan_inline(path, sink);
  constexpr std::size_t kChunkLines = 2048;
  constexpr std::size_t kChunkBytes = 1 << 20;

  ChunkQueue queue(static_cast<std::size_t>(workers) * 4);

  std::mutex reorder_mu;
  std::condition_variable reorder_ready;
  std::condition_variable reorder_space;
  std::map<std::uint64_t, std::vector<ParseOutcome>> reorder;
  const std::size_t reorder_cap = static_cast<std::size_t>(workers) * 8;
  std::uint64_t next_needed = 0;
  bool workers_done = false;

  auto worker_fn = [&] {
    Chunk chunk;
    while (queue.pop(chunk)) {
      std::vector<ParseOutcome> outcomes;
      outcomes.reserve(chunk.size());
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        outcomes.push_back(parse_tweet(chunk.line(i)));
      }
      std::unique_lock lock(reorder_mu);
      // the chunk the collector is waiting for may always enter
      reorder_space.wait(lock, [&] {
        return reorder.size() < reorder_cap || chunk.index == next_needed;
      });
      reorder.emplace(chunk.index, std::move(outcomes));
      reorder_ready.notify_all();
    }
  };

  StreamCounts counts;
  auto collector_fn = [&] {
    for (;;) {
      std::vector<ParseOutcome> outcomes;
      {
        std::unique_lock lock(reorder_mu);
        reorder_ready.wait(lock, [&] {
          return (!reorder.empty() && reorder.begin()->first == next_needed) || workers_done;
        });
        auto it = reorder.find(next_needed);
        if (it == reorder.end()) {
          if (workers_done && reorder.empty()) return;
          continue;
        }
        outcomes = std::move(it->second);
        reorder.erase(it);
        ++next_needed;
        reorder_space.notify_all();
      }
      for (auto& outcome : outcomes) {
        ++counts.lines;
        if (std::holds_alternative<TweetRecord>(outcome)) {
          ++counts.records;
        } else {
          switch (std::get<Skipped>(outcome).reason) {
            case SkipReason::malformed: ++counts.skipped_malformed; break;
            case SkipReason::limit_notice: ++counts.skipped_notices; break;
            case SkipReason::connection_boundary: ++counts.skipped_boundaries; break;
            case SkipReason::not_a_tweet: ++counts.skipped_other; break;
          }
        }
        sink(std::move(outcome));
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker_fn);
  std::thread collector(collector_fn);

  {
    LineReader reader(path);
    Chunk chunk;
    chunk.blob.reserve(kChunkBytes + 4096);
    chunk.spans.reserve(kChunkLines);
    std::string line;
    std::uint64_t index = 0;
    while (reader.next(line)) {
      chunk.add(line);
      if (chunk.size() >= kChunkLines || chunk.blob.size() >= kChunkBytes) {
        chunk.index = index++;
        queue.push(std::move(chunk));
        chunk = Chunk{};
        chunk.blob.reserve(kChunkBytes + 4096);
        chunk.spans.reserve(kChunkLines);
      }
    }
    if (chunk.size() > 0) {
      chunk.index = index++;
      queue.push(std::move(chunk));
    }
  }
  queue.close();
  for (auto& t : threads) t.join();
  {
    std::lock_guard lock(reorder_mu);
    workers_done = true;
    reorder_ready.notify_all();
  }
  collector.join();
  return counts;
}

}  // namespace mediaflow
