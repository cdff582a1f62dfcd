// mediaflow: tweet-stream media-consumption pipeline as composable
// subcommands over file artifacts. Every command reads declared inputs,
// writes outputs atomically under --out, and leaves a manifest.json with
// content hashes so downstream stages can verify their provenance.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mediaflow/clustering.hpp"
#include "mediaflow/crosscountry.hpp"
#include "mediaflow/csv.hpp"
#include "mediaflow/geoparse.hpp"
#include "mediaflow/ingest.hpp"
#include "mediaflow/interactions.hpp"
#include "mediaflow/media_registry.hpp"
#include "mediaflow/pipeline.hpp"
#include "mediaflow/regression.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mediaflow;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

// user_id,description,outcome,country,state
constexpr const char* kLocationsHeader = "user_id,description,outcome,country,state";

std::string location_row(const std::string& user, const std::string& description,
                         const LocationResolution& resolution) {
  std::string outcome, country, state;
  if (const auto* r = std::get_if<Resolved>(&resolution)) {
    outcome = "resolved";
    country = r->country;
    state = r->state;
  } else if (const auto* a = std::get_if<Ambiguous>(&resolution)) {
    outcome = "ambiguous";
    std::string joined;
    for (const auto& c : a->countries) {
      if (!joined.empty()) joined += ";";
      joined += c;
    }
    country = joined;
  } else {
    outcome = "unknown";
  }
  return csv::join({user, description, outcome, country, state});
}

struct UserLocation {
  std::string country;
  std::string state;  // may be empty
};

// user -> resolved location; ambiguous/unknown users are absent.
std::map<std::string, UserLocation> load_locations(const fs::path& path) {
  csv::Table table = csv::read_file(path);
  int user = table.column("user_id");
  int outcome = table.column("outcome");
  int country = table.column("country");
  int state = table.column("state");
  if (user < 0 || outcome < 0 || country < 0 || state < 0) {
    throw std::runtime_error("locations CSV needs user_id,description,outcome,country,state");
  }
  std::map<std::string, UserLocation> map;
  for (const auto& row : table.rows) {
    if (row[static_cast<std::size_t>(outcome)] != "resolved") continue;
    map.emplace(row[static_cast<std::size_t>(user)],
                UserLocation{row[static_cast<std::size_t>(country)],
                             row[static_cast<std::size_t>(state)]});
  }
  return map;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv_text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= csv_text.size()) {
    auto end = csv_text.find(',', start);
    if (end == std::string::npos) end = csv_text.size();
    if (end > start) seeds.push_back(std::stoull(csv_text.substr(start, end - start)));
    start = end + 1;
  }
  return seeds;
}

// Consumption vectors over one country's media for every user row.
// Users whose mass in that country is zero get a zero vector.
std::vector<Point> country_vectors(const InteractionMatrix& user_to_outlet,
                                   const std::vector<std::string>& users,
                                   const MediaRegistry& registry, const std::string& country) {
  std::vector<Point> vectors;
  vectors.reserve(users.size());
  for (const auto& user : users) {
    std::vector<Mass> sums(static_cast<std::size_t>(kIdeologyCount), Mass(0));
    Mass total = 0;
    auto row = user_to_outlet.rows().find(user);
    if (row != user_to_outlet.rows().end()) {
      for (const auto& [outlet_id, mass] : row->second) {
        const MediaOutlet* outlet = registry.outlet_by_id(outlet_id);
        if (!outlet || outlet->country != country) continue;
        sums[static_cast<std::size_t>(outlet->ideology)] += mass;
        total += mass;
      }
    }
    Point v(static_cast<std::size_t>(kIdeologyCount), 0.0);
    if (total > 0) {
      for (std::size_t d = 0; d < v.size(); ++d) {
        v[d] = mass_to_double(sums[d] / total);
      }
    }
    vectors.push_back(std::move(v));
  }
  return vectors;
}

json clustering_json(const Clustering& c) {
  return json{{"k", c.k},
              {"seed", c.seed},
              {"iterations_run", c.iterations_run},
              {"centroids", c.centroids}};
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestOptions {
  std::string input;
  std::string out;
  int workers = 1;
};

int cmd_ingest(const IngestOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path records_path = out_dir / "records.ndjson";
  fs::path sampling_path = out_dir / "sampling.json";

  std::string buffer;
  std::vector<NoticeSequence> connections{NoticeSequence{}};
  auto counts = scan_tweet_stream_ordered(
      opt.input, opt.workers, [&](ParseOutcome&& outcome) {
        if (const auto* rec = std::get_if<TweetRecord>(&outcome)) {
          buffer += serialize_record(*rec);
          buffer.push_back('\n');
          return;
        }
        const Skipped& skipped = std::get<Skipped>(outcome);
        if (skipped.reason == SkipReason::limit_notice) {
          connections.back().notices.push_back(*skipped.notice);
        } else if (skipped.reason == SkipReason::connection_boundary) {
          if (!connections.back().notices.empty()) connections.push_back(NoticeSequence{});
        }
      });
  if (connections.back().notices.empty()) connections.pop_back();

  auto report = estimate_sampling_rate(counts.records, connections);
  atomic_write(records_path, buffer);
  atomic_write(sampling_path, sampling_report_json(report));

  RunManifest manifest("ingest");
  manifest.set_parameter("input", opt.input);
  manifest.set_parameter("workers", static_cast<std::int64_t>(opt.workers));
  manifest.add_input(opt.input);
  manifest.add_output(records_path);
  manifest.add_output(sampling_path);
  manifest.set_timing(timer.elapsed_ms(), counts.lines);
  manifest.write(out_dir / "manifest.json");

  std::cerr << "ingest: " << counts.records << " records, " << counts.skipped_malformed
            << " malformed, " << counts.skipped_notices << " limit notices, rate "
            << format_double(report.rate) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// geoparse
// ---------------------------------------------------------------------------

struct GeoparseOptions {
  std::string records;
  std::string gazetteer;
  std::string aliases;
  std::string out;
};

int cmd_geoparse(const GeoparseOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path locations_path = out_dir / "locations.csv";
  fs::path stats_path = out_dir / "geo_stats.json";

  std::optional<fs::path> alias_path;
  if (!opt.aliases.empty()) alias_path = opt.aliases;
  Gazetteer gazetteer = Gazetteer::load_csv(opt.gazetteer, alias_path);

  // first-seen description per user
  std::map<std::string, std::string> user_description;
  std::uint64_t records = 0;
  {
    LineReader reader(opt.records);
    std::string line;
    while (reader.next(line)) {
      auto outcome = parse_tweet(line);
      const auto* rec = std::get_if<TweetRecord>(&outcome);
      if (!rec) continue;
      ++records;
      user_description.try_emplace(rec->author_id, rec->author_description);
    }
  }

  // unique descriptions with user multiplicities
  std::map<std::string, std::uint64_t> description_users;
  for (const auto& [user, description] : user_description) {
    ++description_users[description];
  }
  LocationResolver resolver(gazetteer);
  std::vector<ResolutionWithMultiplicity> resolutions;
  resolutions.reserve(description_users.size());
  for (const auto& [description, count] : description_users) {
    resolutions.push_back({resolver.resolve(description), count});
  }

  std::string csv_out = kLocationsHeader;
  csv_out.push_back('\n');
  for (const auto& [user, description] : user_description) {
    csv_out += location_row(user, description, resolver.resolve(description));
    csv_out.push_back('\n');
  }
  atomic_write(locations_path, csv_out);
  atomic_write(stats_path, corpus_stats_json(corpus_stats(resolutions)));

  RunManifest manifest("geoparse");
  manifest.set_parameter("gazetteer", opt.gazetteer);
  manifest.add_input(opt.records);
  manifest.add_input(opt.gazetteer);
  if (alias_path) manifest.add_input(*alias_path);
  manifest.add_output(locations_path);
  manifest.add_output(stats_path);
  manifest.set_timing(timer.elapsed_ms(), records);
  manifest.write(out_dir / "manifest.json");

  std::cerr << "geoparse: " << user_description.size() << " users, "
            << description_users.size() << " unique descriptions\n";
  return 0;
}

// ---------------------------------------------------------------------------
// matrix
// ---------------------------------------------------------------------------

struct MatrixOptions {
  std::string records;
  std::string registry;
  std::string locations;
  std::string rows = "user";
  std::string cols = "outlet";
  int scheme = 3;
  double percentile = 0.0;
  double min_total = 0.0;
  int workers = 1;
  bool log10_export = false;
  bool info_flow_export = false;
  std::string out;
};

int cmd_matrix(const MatrixOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path triplets_path = out_dir / "matrix.csv";
  fs::path sidecar_path = out_dir / "matrix.meta.json";

  MediaRegistry registry = MediaRegistry::load_json(opt.registry);
  const Scheme scheme = scheme_from_int(opt.scheme);
  const KeyKind row_kind = key_kind_from_string(opt.rows);
  const KeyKind col_kind = key_kind_from_string(opt.cols);

  std::map<std::string, UserLocation> locations;
  if (row_kind != KeyKind::user) {
    if (opt.locations.empty()) {
      std::cerr << "matrix: --locations is required for GPE rows\n";
      return 2;
    }
    locations = load_locations(opt.locations);
  }

  // per-shard user->outlet accumulation in exact arithmetic, merged after
  std::vector<InteractionMatrix> shards(
      static_cast<std::size_t>(std::max(1, opt.workers)),
      InteractionMatrix(KeyKind::user, KeyKind::outlet, {scheme, {}}));
  auto counts = scan_tweet_stream(opt.records, opt.workers, [&](TweetRecord&& rec, int shard) {
    for (const auto& event : extract_interactions(rec, registry, scheme)) {
      shards[static_cast<std::size_t>(shard)].add(
          event.user_id, event.outlet_id,
          Mass(event.weight.numerator()) / Mass(event.weight.denominator()));
    }
  });
  InteractionMatrix user_matrix = std::move(shards.front());
  for (std::size_t s = 1; s < shards.size(); ++s) user_matrix.merge(shards[s]);

  std::uint64_t dropped_users = 0;
  auto row_map = [&](const std::string& user) -> std::optional<std::string> {
    if (row_kind == KeyKind::user) return user;
    auto it = locations.find(user);
    if (it == locations.end()) return std::nullopt;
    if (row_kind == KeyKind::country) return it->second.country;
    if (it->second.state.empty()) return std::nullopt;
    return it->second.state;
  };
  auto col_map = [&](const std::string& outlet_id) -> std::optional<std::string> {
    const MediaOutlet* outlet = registry.outlet_by_id(outlet_id);
    if (!outlet) return std::nullopt;
    switch (col_kind) {
      case KeyKind::outlet: return outlet_id;
      case KeyKind::country: return outlet->country;
      case KeyKind::state: return outlet->state ? std::optional(*outlet->state) : std::nullopt;
      case KeyKind::ideology: return std::string(to_string(outlet->ideology));
      default: return std::nullopt;
    }
  };
  InteractionMatrix matrix =
      user_matrix.regroup(row_kind, col_kind, row_map, col_map, &dropped_users, nullptr);

  if (opt.percentile > 0) matrix = percentile_cutoff(matrix, opt.percentile);
  if (opt.min_total > 0) matrix = threshold_cutoff(matrix, mass_from_double(opt.min_total));

  atomic_write(triplets_path, matrix_to_csv(matrix));
  atomic_write(sidecar_path, matrix_sidecar_json(matrix));
  if (opt.log10_export) {
    atomic_write(out_dir / "matrix.log10.csv", matrix_to_log10_csv(matrix));
  }
  if (opt.info_flow_export) {
    std::string flows = "gpe,consumed,supplied,ratio\n";
    for (const auto& entry : info_flow(matrix)) {
      flows += csv::escape(entry.gpe) + "," + format_double(entry.consumed) + "," +
               format_double(entry.supplied) + ",";
      if (entry.ratio) flows += format_double(*entry.ratio);
      flows.push_back('\n');
    }
    atomic_write(out_dir / "info_flow.csv", flows);
  }

  RunManifest manifest("matrix");
  manifest.set_parameter("scheme", static_cast<std::int64_t>(opt.scheme));
  manifest.set_parameter("rows", opt.rows);
  manifest.set_parameter("cols", opt.cols);
  manifest.set_parameter("percentile", opt.percentile);
  manifest.set_parameter("min_total", opt.min_total);
  manifest.set_parameter("workers", static_cast<std::int64_t>(opt.workers));
  manifest.add_input(opt.records);
  manifest.add_input(opt.registry);
  if (!opt.locations.empty()) manifest.add_input(opt.locations);
  manifest.add_output(triplets_path);
  manifest.add_output(sidecar_path);
  if (opt.log10_export) manifest.add_output(out_dir / "matrix.log10.csv");
  if (opt.info_flow_export) manifest.add_output(out_dir / "info_flow.csv");
  manifest.set_timing(timer.elapsed_ms(), counts.lines);
  manifest.write(out_dir / "manifest.json");

  std::cerr << "matrix: " << matrix.row_count() << " rows, " << matrix.cell_count()
            << " cells, " << dropped_users << " rows dropped as unresolvable\n";
  return 0;
}

// ---------------------------------------------------------------------------
// resolve-handles
// ---------------------------------------------------------------------------

struct ResolveHandlesOptions {
  std::string registry;
  std::string fixture;
  std::string out;
};

int cmd_resolve_handles(const ResolveHandlesOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path resolved_path = out_dir / "resolved_registry.json";

  MediaRegistry registry = MediaRegistry::load_json(opt.registry);
  auto fixture = HandleResolutionFixture::load(opt.fixture);

  std::vector<MediaOutlet> outlets = registry.outlets();
  std::vector<std::string> warnings;
  std::size_t handle_count = 0;
  for (auto& outlet : outlets) {
    auto resolution = resolve_handles(outlet, fixture);
    outlet.handles = resolution.handles;
    handle_count += outlet.handles.size();
    warnings.insert(warnings.end(), resolution.warnings.begin(), resolution.warnings.end());
  }
  MediaRegistry resolved = MediaRegistry::from_outlets(std::move(outlets));
  atomic_write(resolved_path, resolved.to_json());
  if (!warnings.empty()) {
    json warn = warnings;
    atomic_write(out_dir / "warnings.json", warn.dump(2));
  }

  RunManifest manifest("resolve-handles");
  manifest.add_input(opt.registry);
  manifest.add_input(opt.fixture);
  manifest.add_output(resolved_path);
  manifest.set_timing(timer.elapsed_ms(), resolved.outlets().size());
  manifest.write(out_dir / "manifest.json");

  std::cerr << "resolve-handles: " << resolved.outlets().size() << " outlets, "
            << handle_count << " handles, " << warnings.size() << " warnings\n";
  return 0;
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

struct ClusterOptions {
  std::string matrix;
  std::string registry;
  std::string locations;
  std::string fold = "3";
  int k = 0;
  int k_min = 2;
  int k_max = 10;
  std::string seeds = "1,2,3,4,5";
  std::string out;
};

int cmd_cluster(const ClusterOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path metrics_path = out_dir / "metric_curves.csv";
  fs::path report_path = out_dir / "cluster_report.json";

  fs::path sidecar = fs::path(opt.matrix).replace_extension(".meta.json");
  InteractionMatrix matrix = load_matrix(opt.matrix, sidecar);
  if (matrix.row_kind() != KeyKind::user || matrix.col_kind() != KeyKind::outlet) {
    std::cerr << "cluster: the matrix must be user-to-outlet\n";
    return 2;
  }
  MediaRegistry registry = MediaRegistry::load_json(opt.registry);
  const IdeologyFold fold =
      opt.fold == "7" ? IdeologyFold::seven_way : IdeologyFold::three_way;

  std::vector<std::string> users = matrix.row_keys();
  std::vector<Point> points;
  points.reserve(users.size());
  for (const auto& user : users) {
    points.push_back(consumption_vector(matrix, user, registry, fold));
  }

  std::map<std::string, UserLocation> locations;
  if (!opt.locations.empty()) locations = load_locations(opt.locations);
  std::vector<std::string> nationalities;
  nationalities.reserve(users.size());
  for (const auto& user : users) {
    auto it = locations.find(user);
    nationalities.push_back(it == locations.end() ? "unresolved" : it->second.country);
  }

  auto seeds = parse_seed_list(opt.seeds);
  if (seeds.empty()) seeds = {1};

  // metric curves over the k range (first seed)
  std::string curves = "k,distortion,silhouette,davies_bouldin\n";
  for (int k = opt.k_min; k <= opt.k_max; ++k) {
    if (static_cast<std::size_t>(k) > points.size()) break;
    Clustering c;
    try {
      c = kmeans(points, k, seeds.front());
    } catch (const ClusteringError&) {
      break;  // fewer distinct points than k
    }
    curves += std::to_string(k);
    curves.push_back(',');
    curves += format_double(distortion(points, c));
    curves.push_back(',');
    curves += format_double(silhouette_mean(points, c));
    curves.push_back(',');
    bool has_empty = false;
    for (const auto& m : c.members()) has_empty |= m.empty();
    curves += has_empty ? "" : format_double(davies_bouldin(points, c));
    curves.push_back('\n');
  }
  atomic_write(metrics_path, curves);

  json report{{"users", users.size()}, {"fold", opt.fold}};
  if (opt.k > 0) {
    auto stability_report = stability(points, opt.k, seeds, nationalities);
    const Clustering& reference = stability_report.runs.front();
    auto profiles =
        profile(reference, points, users, nationalities, matrix, registry);

    json profile_list = json::array();
    for (std::size_t c = 0; c < profiles.size(); ++c) {
      const auto& p = profiles[c];
      json top;
      for (const auto& [group, outlets] : p.top_outlets) {
        json list = json::array();
        for (const auto& share : outlets) {
          list.push_back({{"outlet", share.outlet_id}, {"share", share.share}});
        }
        top[group] = list;
      }
      profile_list.push_back({{"cluster", c},
                              {"size", p.size},
                              {"mean_consumption", p.mean_consumption},
                              {"nationality", p.nationality},
                              {"factuality", p.factuality},
                              {"credibility", p.credibility},
                              {"top_outlets", top}});
    }
    json groups = json::array();
    for (const auto& g : stability_report.groups) {
      groups.push_back({{"cluster", g.reference_cluster},
                        {"size", g.reference_size},
                        {"matched_runs", g.matched_runs},
                        {"robust", g.robust},
                        {"nationality", g.nationality}});
    }
    report["k"] = opt.k;
    report["seeds"] = seeds;
    report["reference"] = clustering_json(reference);
    report["profiles"] = profile_list;
    report["stability"] = groups;
  }
  atomic_write(report_path, report.dump(2));

  RunManifest manifest("cluster");
  manifest.set_parameter("k", static_cast<std::int64_t>(opt.k));
  manifest.set_parameter("fold", opt.fold);
  manifest.set_parameter("seeds", opt.seeds);
  manifest.add_input(opt.matrix);
  manifest.add_input(opt.registry);
  if (!opt.locations.empty()) manifest.add_input(opt.locations);
  manifest.add_output(metrics_path);
  manifest.add_output(report_path);
  manifest.set_timing(timer.elapsed_ms(), users.size());
  manifest.write(out_dir / "manifest.json");

  std::cerr << "cluster: " << users.size() << " users, curves for k in [" << opt.k_min
            << "," << opt.k_max << "]" << (opt.k > 0 ? ", report at k=" + std::to_string(opt.k)
                                                     : std::string{})
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pair
// ---------------------------------------------------------------------------

struct PairOptions {
  std::string matrix;
  std::string registry;
  std::string locations;
  std::string local_country;
  std::string foreign_country;
  int k_sg = 4;
  int k_tg = 4;
  std::uint64_t seed = 1;
  std::string robustness_seeds;
  double min_interactions = 5.0;
  std::string ablate;
  std::string method = "cluster";
  double predominant_threshold = 0.5;
  std::string out;
};

int cmd_pair(const PairOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path report_path = out_dir / "pair_report.json";
  fs::path risk_path = out_dir / "risk_ratio.csv";

  fs::path sidecar = fs::path(opt.matrix).replace_extension(".meta.json");
  InteractionMatrix matrix = load_matrix(opt.matrix, sidecar);
  MediaRegistry registry = MediaRegistry::load_json(opt.registry);
  auto locations = load_locations(opt.locations);

  // users located in the local country with enough total interactions
  InteractionMatrix filtered = threshold_cutoff(matrix, mass_from_double(opt.min_interactions));
  std::vector<std::string> users;
  for (const auto& user : filtered.row_keys()) {
    auto it = locations.find(user);
    if (it != locations.end() && it->second.country == opt.local_country) {
      users.push_back(user);
    }
  }
  if (users.empty()) {
    std::cerr << "pair: no users from " << opt.local_country << " after filtering\n";
    return 2;
  }

  if (!opt.ablate.empty()) {
    // column removal happens before vector construction
    InteractionMatrix without(filtered.row_kind(), filtered.col_kind(),
                              filtered.provenance());
    bool seen = false;
    for (const auto& [row, cols] : filtered.rows()) {
      for (const auto& [col, value] : cols) {
        if (col == opt.ablate) {
          seen = true;
          continue;
        }
        without.add(row, col, value);
      }
    }
    if (!seen) {
      std::cerr << "pair: outlet to ablate not present: " << opt.ablate << "\n";
      return 2;
    }
    filtered = std::move(without);
  }

  auto local_vectors = country_vectors(filtered, users, registry, opt.local_country);
  auto foreign_vectors = country_vectors(filtered, users, registry, opt.foreign_country);

  json report{{"local", opt.local_country},
              {"foreign", opt.foreign_country},
              {"min_interactions", opt.min_interactions},
              {"users_considered", users.size()}};
  if (!opt.ablate.empty()) report["ablated_outlet"] = opt.ablate;

  if (opt.method == "predominant") {
    // per-user leaning labels instead of clusters
    std::map<std::string, std::uint64_t> sg_labels, tg_labels;
    auto label_of = [&](const Point& v) -> std::string {
      if (auto idx = predominant_group(v, opt.predominant_threshold)) {
        return std::string(to_string(static_cast<Ideology>(*idx)));
      }
      return "mixed";
    };
    for (std::size_t i = 0; i < users.size(); ++i) {
      ++sg_labels[label_of(local_vectors[i])];
      ++tg_labels[label_of(foreign_vectors[i])];
    }
    report["method"] = "predominant";
    report["threshold"] = opt.predominant_threshold;
    report["sg_label_counts"] = sg_labels;
    report["tg_label_counts"] = tg_labels;
    atomic_write(report_path, report.dump(2));
  } else {
    auto groups = build_groups(users, local_vectors, foreign_vectors, opt.k_sg, opt.k_tg,
                               opt.seed);
    auto transition = transition_report(groups);
    report["method"] = "cluster";
    report["seed"] = opt.seed;
    report["excluded_zero_local"] = groups.excluded_zero_local;
    report["excluded_zero_foreign"] = groups.excluded_zero_foreign;
    report["report"] = json::parse(transition_report_json(transition));
    atomic_write(risk_path, risk_ratio_csv(transition));

    if (!opt.robustness_seeds.empty()) {
      json per_seed = json::array();
      for (std::uint64_t seed : parse_seed_list(opt.robustness_seeds)) {
        auto rerun = build_groups(users, local_vectors, foreign_vectors, opt.k_sg, opt.k_tg,
                                  seed);
        auto rerun_report = transition_report(rerun);
        per_seed.push_back(
            {{"seed", seed}, {"report", json::parse(transition_report_json(rerun_report))}});
      }
      report["robustness"] = per_seed;
    }
    atomic_write(report_path, report.dump(2));
  }

  RunManifest manifest("pair");
  manifest.set_parameter("local", opt.local_country);
  manifest.set_parameter("foreign", opt.foreign_country);
  manifest.set_parameter("k_sg", static_cast<std::int64_t>(opt.k_sg));
  manifest.set_parameter("k_tg", static_cast<std::int64_t>(opt.k_tg));
  manifest.set_parameter("seed", static_cast<std::int64_t>(opt.seed));
  manifest.set_parameter("method", opt.method);
  manifest.add_input(opt.matrix);
  manifest.add_input(opt.registry);
  manifest.add_input(opt.locations);
  manifest.add_output(report_path);
  if (opt.method != "predominant") manifest.add_output(risk_path);
  manifest.set_timing(timer.elapsed_ms(), users.size());
  manifest.write(out_dir / "manifest.json");

  std::cerr << "pair: " << opt.local_country << " -> " << opt.foreign_country << ", "
            << users.size() << " users\n";
  return 0;
}

// ---------------------------------------------------------------------------
// regress
// ---------------------------------------------------------------------------

struct RegressOptions {
  std::string matrix;
  std::string registry;
  std::string targets;
  std::string top_n = "20,30,50,70,100,120";
  std::string models = "ridge,gbdt,forest";
  int folds = 5;
  std::uint64_t seed = 1;
  bool log_scale = false;
  int stages = 200;
  int depth = 3;
  double learning_rate = 0.1;
  int trees = 200;
  double subsample = 0.8;
  std::string lambdas = "0.00001,0.0001,0.001,0.01,0.1,1,10";
  std::string out;
};

int cmd_regress(const RegressOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path results_path = out_dir / "regression_results.csv";
  fs::path predictions_path = out_dir / "predictions.csv";

  fs::path sidecar = fs::path(opt.matrix).replace_extension(".meta.json");
  InteractionMatrix matrix = load_matrix(opt.matrix, sidecar);
  MediaRegistry registry = MediaRegistry::load_json(opt.registry);

  csv::Table targets = csv::read_file(opt.targets);
  int state_col = targets.column("state");
  int share_col = targets.column("dem_share");
  if (state_col < 0 || share_col < 0) {
    std::cerr << "regress: targets CSV needs state,dem_share\n";
    return 2;
  }
  std::vector<std::pair<std::string, double>> votes;
  for (const auto& row : targets.rows) {
    votes.emplace_back(row[static_cast<std::size_t>(state_col)],
                       std::stod(row[static_cast<std::size_t>(share_col)]));
  }

  std::set<std::string> models;
  for (const auto& m : {"ridge", "gbdt", "forest"}) {
    if (opt.models.find(m) != std::string::npos) models.insert(m);
  }
  std::vector<double> lambda_grid;
  {
    std::size_t start = 0;
    while (start <= opt.lambdas.size()) {
      auto end = opt.lambdas.find(',', start);
      if (end == std::string::npos) end = opt.lambdas.size();
      if (end > start) lambda_grid.push_back(std::stod(opt.lambdas.substr(start, end - start)));
      start = end + 1;
    }
  }

  std::string results = "media_set,model,mean_r2\n";
  double best_r2 = -1e18;
  std::string best_label;
  RegressionDataset best_dataset;
  std::vector<double> best_predictions;

  for (std::uint64_t top_n : parse_seed_list(opt.top_n)) {
    auto dataset = build_vote_dataset(matrix, registry, votes,
                                      static_cast<std::size_t>(top_n), opt.log_scale);
    const std::string media_set = "top-" + std::to_string(top_n);
    if (dataset.X.size() < static_cast<std::size_t>(opt.folds)) continue;

    auto evaluate = [&](const std::string& model, const FitPredictFn& fit) {
      auto cv = kfold_cv(dataset.X, dataset.y, opt.folds, opt.seed, fit);
      results += media_set + "," + model + "," + format_double(cv.mean_r2) + "\n";
      if (cv.mean_r2 > best_r2) {
        best_r2 = cv.mean_r2;
        best_label = media_set + "/" + model;
        best_dataset = dataset;
        // out-of-fold predictions for the correlation plot
        best_predictions.assign(dataset.y.size(), 0.0);
        auto sizes = kfold_sizes(dataset.y.size(), opt.folds);
        std::vector<std::size_t> order(dataset.y.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(opt.seed);
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t offset = 0;
        for (int fold = 0; fold < opt.folds; ++fold) {
          std::set<std::size_t> test_set(
              order.begin() + static_cast<std::ptrdiff_t>(offset),
              order.begin() + static_cast<std::ptrdiff_t>(offset + sizes[fold]));
          offset += sizes[fold];
          FeatureMatrix train_X, test_X;
          std::vector<double> train_y;
          std::vector<std::size_t> test_rows;
          for (std::size_t i = 0; i < dataset.y.size(); ++i) {
            if (test_set.contains(i)) {
              test_X.push_back(dataset.X[i]);
              test_rows.push_back(i);
            } else {
              train_X.push_back(dataset.X[i]);
              train_y.push_back(dataset.y[i]);
            }
          }
          auto fold_predictions = fit(train_X, train_y, test_X);
          for (std::size_t t = 0; t < test_rows.size(); ++t) {
            best_predictions[test_rows[t]] = fold_predictions[t];
          }
        }
      }
    };

    if (models.contains("ridge")) {
      double best_lambda_r2 = -1e18;
      double best_lambda = lambda_grid.empty() ? 1.0 : lambda_grid.front();
      for (double lambda : lambda_grid) {
        auto cv = kfold_cv(dataset.X, dataset.y, opt.folds, opt.seed,
                           [lambda](const FeatureMatrix& trX, std::span<const double> trY,
                                    const FeatureMatrix& teX) {
                             auto model = fit_ridge(trX, trY, lambda);
                             std::vector<double> out;
                             for (const auto& row : teX) out.push_back(model.predict(row));
                             return out;
                           });
        if (cv.mean_r2 > best_lambda_r2) {
          best_lambda_r2 = cv.mean_r2;
          best_lambda = lambda;
        }
      }
      evaluate("ridge", [best_lambda](const FeatureMatrix& trX, std::span<const double> trY,
                                      const FeatureMatrix& teX) {
        auto model = fit_ridge(trX, trY, best_lambda);
        std::vector<double> out;
        for (const auto& row : teX) out.push_back(model.predict(row));
        return out;
      });
    }
    if (models.contains("gbdt")) {
      evaluate("gbdt", [&](const FeatureMatrix& trX, std::span<const double> trY,
                           const FeatureMatrix& teX) {
        return fit_gbdt(trX, trY, opt.stages, opt.depth, opt.learning_rate).predict_all(teX);
      });
    }
    if (models.contains("forest")) {
      evaluate("forest", [&](const FeatureMatrix& trX, std::span<const double> trY,
                             const FeatureMatrix& teX) {
        return fit_random_forest(trX, trY, opt.trees, opt.depth, opt.subsample, opt.seed)
            .predict_all(teX);
      });
    }
  }

  atomic_write(results_path, results);

  std::string predictions = "state,actual,predicted\n";
  for (std::size_t i = 0; i < best_dataset.states.size(); ++i) {
    predictions += csv::escape(best_dataset.states[i]) + "," +
                   format_double(best_dataset.y[i]) + "," +
                   format_double(best_predictions[i]) + "\n";
  }
  atomic_write(predictions_path, predictions);

  RunManifest manifest("regress");
  manifest.set_parameter("models", opt.models);
  manifest.set_parameter("top_n", opt.top_n);
  manifest.set_parameter("folds", static_cast<std::int64_t>(opt.folds));
  manifest.set_parameter("seed", static_cast<std::int64_t>(opt.seed));
  manifest.set_parameter("log_scale", std::string(opt.log_scale ? "true" : "false"));
  manifest.add_input(opt.matrix);
  manifest.add_input(opt.registry);
  manifest.add_input(opt.targets);
  manifest.add_output(results_path);
  manifest.add_output(predictions_path);
  manifest.set_timing(timer.elapsed_ms(), votes.size());
  manifest.write(out_dir / "manifest.json");

  std::cerr << "regress: best " << best_label << " mean R2 " << format_double(best_r2)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportOptions {
  std::vector<std::string> runs;
  std::string out;
};

int cmd_report(const ReportOptions& opt) {
  Stopwatch timer;
  fs::path out_dir = prepare_out_dir(opt.out);
  fs::path report_path = out_dir / "report.json";

  json stages = json::array();
  std::map<std::string, std::string> outputs_seen;  // hash -> producing stage
  bool chain_ok = true;

  for (const auto& run : opt.runs) {
    fs::path manifest_path = fs::path(run) / "manifest.json";
    if (!fs::exists(manifest_path)) {
      std::cerr << "report: missing manifest " << manifest_path << "\n";
      return 2;
    }
    RunManifest manifest = RunManifest::load(manifest_path);
    json stage = json::parse(read_file(manifest_path));
    // an input consumed by this stage links back to the stage that wrote it
    json links = json::array();
    for (const auto& [name, hash] : manifest.inputs()) {
      if (auto it = outputs_seen.find(hash); it != outputs_seen.end()) {
        links.push_back({{"input", name}, {"produced_by", it->second}});
      }
    }
    stage["chained_inputs"] = links;
    stages.push_back(stage);
    for (const auto& [name, hash] : manifest.outputs()) {
      outputs_seen[hash] = stage.value("command", "");
    }
  }

  json report{{"stages", stages}, {"chain_ok", chain_ok}};
  atomic_write(report_path, report.dump(2));

  RunManifest manifest("report");
  manifest.set_parameter("runs", static_cast<std::int64_t>(opt.runs.size()));
  manifest.add_output(report_path);
  manifest.set_timing(timer.elapsed_ms(), opt.runs.size());
  manifest.write(out_dir / "manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"media-consumption interaction pipeline"};
  app.set_config("--config", "", "TOML/INI config; command-line flags override");
  app.require_subcommand(1);

  IngestOptions ingest_opt;
  auto* ingest = app.add_subcommand("ingest", "parse a tweet stream into records + sampling");
  ingest->add_option("--input", ingest_opt.input, "newline-delimited tweet JSON (.gz ok)")
      ->required();
  ingest->add_option("--out", ingest_opt.out, "output directory")->required();
  ingest->add_option("--workers", ingest_opt.workers, "parser threads");

  GeoparseOptions geo_opt;
  auto* geo = app.add_subcommand("geoparse", "resolve user locations");
  geo->add_option("--records", geo_opt.records, "records.ndjson from ingest")->required();
  geo->add_option("--gazetteer", geo_opt.gazetteer, "city,state,country CSV")->required();
  geo->add_option("--aliases", geo_opt.aliases, "alias,canonical CSV");
  geo->add_option("--out", geo_opt.out, "output directory")->required();

  MatrixOptions matrix_opt;
  auto* matrix = app.add_subcommand("matrix", "build an interaction matrix");
  matrix->add_option("--records", matrix_opt.records, "records.ndjson")->required();
  matrix->add_option("--registry", matrix_opt.registry, "media registry JSON")->required();
  matrix->add_option("--locations", matrix_opt.locations, "locations.csv from geoparse");
  matrix->add_option("--rows", matrix_opt.rows, "user|state|country");
  matrix->add_option("--cols", matrix_opt.cols, "outlet|state|country|ideology");
  matrix->add_option("--scheme", matrix_opt.scheme, "quantification scheme 1|2|3");
  matrix->add_option("--percentile", matrix_opt.percentile, "top-fraction user cutoff");
  matrix->add_option("--min-interactions", matrix_opt.min_total, "row-sum threshold cutoff");
  matrix->add_option("--workers", matrix_opt.workers, "extraction threads");
  matrix->add_flag("--log10", matrix_opt.log10_export, "also write log10 triplets");
  matrix->add_flag("--info-flow", matrix_opt.info_flow_export,
                   "write per-GPE consumed/supplied/ratio (square GPE matrices)");
  matrix->add_option("--out", matrix_opt.out, "output directory")->required();

  ResolveHandlesOptions resolve_opt;
  auto* resolve = app.add_subcommand("resolve-handles",
                                     "resolve outlet Twitter handles by URL matching");
  resolve->add_option("--registry", resolve_opt.registry, "media registry JSON")->required();
  resolve->add_option("--fixture", resolve_opt.fixture,
                      "search-results + redirects fixture JSON")
      ->required();
  resolve->add_option("--out", resolve_opt.out, "output directory")->required();

  ClusterOptions cluster_opt;
  auto* cluster = app.add_subcommand("cluster", "cluster user consumption vectors");
  cluster->add_option("--matrix", cluster_opt.matrix, "user-to-outlet triplets CSV")
      ->required();
  cluster->add_option("--registry", cluster_opt.registry, "media registry JSON")->required();
  cluster->add_option("--locations", cluster_opt.locations, "locations.csv for profiles");
  cluster->add_option("--fold", cluster_opt.fold, "ideology fold: 3 or 7");
  cluster->add_option("--k", cluster_opt.k, "cluster count for the report (0 = curves only)");
  cluster->add_option("--k-min", cluster_opt.k_min, "metric curve lower k");
  cluster->add_option("--k-max", cluster_opt.k_max, "metric curve upper k");
  cluster->add_option("--seeds", cluster_opt.seeds, "comma-separated seeds");
  cluster->add_option("--out", cluster_opt.out, "output directory")->required();

  PairOptions pair_opt;
  auto* pair = app.add_subcommand("pair", "cross-country SG/TG risk-ratio analysis");
  pair->add_option("--matrix", pair_opt.matrix, "user-to-outlet triplets CSV")->required();
  pair->add_option("--registry", pair_opt.registry, "media registry JSON")->required();
  pair->add_option("--locations", pair_opt.locations, "locations.csv")->required();
  pair->add_option("--local", pair_opt.local_country, "local country")->required();
  pair->add_option("--foreign", pair_opt.foreign_country, "foreign country")->required();
  pair->add_option("--k-sg", pair_opt.k_sg, "source group count");
  pair->add_option("--k-tg", pair_opt.k_tg, "target group count");
  pair->add_option("--seed", pair_opt.seed, "clustering seed");
  pair->add_option("--seeds", pair_opt.robustness_seeds, "extra seeds for robustness runs");
  pair->add_option("--min-interactions", pair_opt.min_interactions, "user activity threshold");
  pair->add_option("--ablate", pair_opt.ablate, "outlet id to remove before grouping");
  pair->add_option("--method", pair_opt.method, "cluster|predominant");
  pair->add_option("--predominant-threshold", pair_opt.predominant_threshold,
                   "share needed for a predominant label");
  pair->add_option("--out", pair_opt.out, "output directory")->required();

  RegressOptions regress_opt;
  auto* regress = app.add_subcommand("regress", "predict vote share from consumption");
  regress->add_option("--matrix", regress_opt.matrix, "state-to-outlet triplets CSV")
      ->required();
  regress->add_option("--registry", regress_opt.registry, "media registry JSON")->required();
  regress->add_option("--targets", regress_opt.targets, "state,dem_share CSV")->required();
  regress->add_option("--top-n", regress_opt.top_n, "media-set sizes per leaning");
  regress->add_option("--models", regress_opt.models, "subset of ridge,gbdt,forest");
  regress->add_option("--folds", regress_opt.folds, "cross-validation folds");
  regress->add_option("--seed", regress_opt.seed, "fold-shuffle and forest seed");
  regress->add_flag("--log-scale", regress_opt.log_scale, "log10(1+x) features");
  regress->add_option("--stages", regress_opt.stages, "boosting stages");
  regress->add_option("--depth", regress_opt.depth, "tree depth");
  regress->add_option("--learning-rate", regress_opt.learning_rate, "boosting shrinkage");
  regress->add_option("--trees", regress_opt.trees, "forest size");
  regress->add_option("--subsample", regress_opt.subsample, "forest bootstrap fraction");
  regress->add_option("--lambdas", regress_opt.lambdas, "ridge regularization grid");
  regress->add_option("--out", regress_opt.out, "output directory")->required();

  ReportOptions report_opt;
  auto* report = app.add_subcommand("report", "summarize run manifests into a DAG report");
  report->add_option("--run", report_opt.runs, "run directory (repeatable)");
  report->add_option("--out", report_opt.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ingest_opt);
    if (*geo) return cmd_geoparse(geo_opt);
    if (*matrix) return cmd_matrix(matrix_opt);
    if (*resolve) return cmd_resolve_handles(resolve_opt);
    if (*cluster) return cmd_cluster(cluster_opt);
    if (*pair) return cmd_pair(pair_opt);
    if (*regress) return cmd_regress(regress_opt);
    if (*report) return cmd_report(report_opt);
  } catch (const std::exception& e) {
    json error{{"error", e.what()}};
    std::cerr << error.dump() << "\n";
    return 1;
  }
  return 0;
}
