#include "mediaflow/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mediaflow/csv.hpp"
#include "mediaflow/url.hpp"

namespace mediaflow {

using nlohmann::json;

double mass_to_double(const Mass& value) { return value.convert_to<double>(); }

Mass mass_from_double(double value) {
  // Doubles are dyadic rationals, so this conversion is exact.
  if (!std::isfinite(value)) throw MatrixError("non-finite matrix value");
  Mass result;
  int exp = 0;
  double mantissa = std::frexp(value, &exp);
  // mantissa * 2^53 is integral
  auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  result = Mass(scaled);
  exp -= 53;
  if (exp > 0) {
    result *= Mass(boost::multiprecision::pow(boost::multiprecision::cpp_int(2), exp));
  } else if (exp < 0) {
    result /= Mass(boost::multiprecision::pow(boost::multiprecision::cpp_int(2), -exp));
  }
  return result;
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::occurrence: return "occurrence";
    case Scheme::country: return "country";
    case Scheme::weighted: return "weighted";
  }
  return "?";
}

Scheme scheme_from_int(int value) {
  switch (value) {
    case 1: return Scheme::occurrence;
    case 2: return Scheme::country;
    case 3: return Scheme::weighted;
    default: throw MatrixError("scheme must be 1, 2 or 3");
  }
}

std::string_view to_string(KeyKind kind) {
  switch (kind) {
    case KeyKind::user: return "user";
    case KeyKind::state: return "state";
    case KeyKind::country: return "country";
    case KeyKind::outlet: return "outlet";
    case KeyKind::ideology: return "ideology";
  }
  return "?";
}

KeyKind key_kind_from_string(std::string_view s) {
  if (s == "user") return KeyKind::user;
  if (s == "state") return KeyKind::state;
  if (s == "country") return KeyKind::country;
  if (s == "outlet") return KeyKind::outlet;
  if (s == "ideology") return KeyKind::ideology;
  throw MatrixError("unknown key kind: " + std::string(s));
}

std::vector<InteractionEvent> extract_interactions(const TweetRecord& record,
                                                   const MediaRegistry& registry,
                                                   Scheme scheme) {
  // Occurrence counting per outlet, preserving first-seen order for
  // deterministic event order.
  std::vector<std::pair<const MediaOutlet*, std::int64_t>> occurrences;
  auto bump = [&](const MediaOutlet* outlet) {
    if (!outlet) return;
    for (auto& [existing, count] : occurrences) {
      if (existing == outlet) {
        ++count;
        return;
      }
    }
    occurrences.emplace_back(outlet, 1);
  };

  if (record.retweeted_account) bump(registry.outlet_for_handle(*record.retweeted_account));
  if (record.quoted_account) bump(registry.outlet_for_handle(*record.quoted_account));
  if (record.reply_target) bump(registry.outlet_for_handle(*record.reply_target));
  for (const auto& mention : record.mentioned_accounts) {
    bump(registry.outlet_for_handle(mention));
  }
  for (const auto& shared : record.shared_urls) {
    bump(registry.outlet_for_url(shared));
  }

  std::vector<InteractionEvent> events;
  if (occurrences.empty()) return events;

  std::int64_t total = 0;
  for (const auto& [outlet, count] : occurrences) total += count;

  events.reserve(occurrences.size());
  for (const auto& [outlet, count] : occurrences) {
    InteractionEvent event;
    event.user_id = record.author_id;
    event.outlet_id = outlet->id;
    event.tweet_id = record.tweet_id;
    event.scheme = scheme;
    switch (scheme) {
      case Scheme::occurrence:
        event.weight = Weight(count);
        break;
      case Scheme::country:
        // Outlets from the same country are not distinguished: every distinct
        // outlet receives the same unit value regardless of repetition.
        event.weight = Weight(1);
        break;
      case Scheme::weighted:
        event.weight = Weight(count, total);
        break;
    }
    events.push_back(std::move(event));
  }
  return events;
}

InteractionMatrix::InteractionMatrix(KeyKind row_kind, KeyKind col_kind,
                                     MatrixProvenance provenance)
    : row_kind_(row_kind), col_kind_(col_kind), provenance_(std::move(provenance)) {}

void InteractionMatrix::add(const std::string& row, const std::string& col,
                            const Mass& value) {
  if (value < 0) throw MatrixError("negative interaction mass");
  if (value == 0) return;
  rows_[row][col] += value;
}

void InteractionMatrix::merge(const InteractionMatrix& other) {
  if (other.row_kind_ != row_kind_ || other.col_kind_ != col_kind_) {
    throw MatrixError("cannot merge matrices with mixed key types (" +
                      std::string(to_string(row_kind_)) + "->" +
                      std::string(to_string(col_kind_)) + " vs " +
                      std::string(to_string(other.row_kind_)) + "->" +
                      std::string(to_string(other.col_kind_)) + ")");
  }
  for (const auto& [row, cols] : other.rows_) {
    auto& target = rows_[row];
    for (const auto& [col, value] : cols) target[col] += value;
  }
}

const Mass* InteractionMatrix::cell(const std::string& row, const std::string& col) const {
  auto rit = rows_.find(row);
  if (rit == rows_.end()) return nullptr;
  auto cit = rit->second.find(col);
  return cit == rit->second.end() ? nullptr : &cit->second;
}

std::size_t InteractionMatrix::cell_count() const {
  std::size_t count = 0;
  for (const auto& [row, cols] : rows_) count += cols.size();
  return count;
}

Mass InteractionMatrix::row_sum(const std::string& row) const {
  Mass sum = 0;
  if (auto it = rows_.find(row); it != rows_.end()) {
    for (const auto& [col, value] : it->second) sum += value;
  }
  return sum;
}

std::map<std::string, Mass> InteractionMatrix::row_sums() const {
  std::map<std::string, Mass> sums;
  for (const auto& [row, cols] : rows_) {
    Mass sum = 0;
    for (const auto& [col, value] : cols) sum += value;
    sums.emplace(row, std::move(sum));
  }
  return sums;
}

std::map<std::string, Mass> InteractionMatrix::col_sums() const {
  std::map<std::string, Mass> sums;
  for (const auto& [row, cols] : rows_) {
    for (const auto& [col, value] : cols) sums[col] += value;
  }
  return sums;
}

Mass InteractionMatrix::total_mass() const {
  Mass sum = 0;
  for (const auto& [row, cols] : rows_) {
    for (const auto& [col, value] : cols) sum += value;
  }
  return sum;
}

std::vector<std::string> InteractionMatrix::row_keys() const {
  std::vector<std::string> keys;
  keys.reserve(rows_.size());
  for (const auto& [row, cols] : rows_) keys.push_back(row);
  return keys;
}

std::vector<std::string> InteractionMatrix::col_keys() const {
  std::map<std::string, bool> seen;
  for (const auto& [row, cols] : rows_) {
    for (const auto& [col, value] : cols) seen.emplace(col, true);
  }
  std::vector<std::string> keys;
  keys.reserve(seen.size());
  for (const auto& [col, flag] : seen) keys.push_back(col);
  return keys;
}

InteractionMatrix InteractionMatrix::regroup(
    KeyKind new_row_kind, KeyKind new_col_kind,
    const std::function<std::optional<std::string>(const std::string&)>& row_map,
    const std::function<std::optional<std::string>(const std::string&)>& col_map,
    std::uint64_t* dropped_rows, std::uint64_t* dropped_cols) const {
  InteractionMatrix out(new_row_kind, new_col_kind, provenance_);
  for (const auto& [row, cols] : rows_) {
    std::optional<std::string> new_row = row_map ? row_map(row) : std::optional(row);
    if (!new_row) {
      if (dropped_rows) ++*dropped_rows;
      continue;
    }
    for (const auto& [col, value] : cols) {
      std::optional<std::string> new_col = col_map ? col_map(col) : std::optional(col);
      if (!new_col) {
        if (dropped_cols) ++*dropped_cols;
        continue;
      }
      out.add(*new_row, *new_col, value);
    }
  }
  return out;
}

InteractionMatrix build_matrix(
    std::span<const InteractionEvent> events, KeyKind row_kind, KeyKind col_kind,
    const std::function<std::optional<std::string>(const std::string&)>& row_key,
    const std::function<std::optional<std::string>(const std::string&)>& col_key,
    MatrixProvenance provenance, BuildStats* stats) {
  InteractionMatrix matrix(row_kind, col_kind, std::move(provenance));
  for (const auto& event : events) {
    if (stats) ++stats->events_in;
    std::optional<std::string> row =
        row_key ? row_key(event.user_id) : std::optional(event.user_id);
    if (!row) {
      if (stats) ++stats->dropped_unresolvable;
      continue;
    }
    std::optional<std::string> col =
        col_key ? col_key(event.outlet_id) : std::optional(event.outlet_id);
    if (!col) {
      if (stats) ++stats->dropped_unresolvable;
      continue;
    }
    matrix.add(*row, *col,
               Mass(event.weight.numerator()) / Mass(event.weight.denominator()));
  }
  return matrix;
}

InteractionMatrix percentile_cutoff(const InteractionMatrix& m, double p) {
  if (m.row_kind() != KeyKind::user) {
    throw MatrixError("percentile_cutoff applies to user-rowed matrices");
  }
  if (p < 0.0 || p >= 1.0) throw MatrixError("percentile must be in [0,1)");

  const auto sums = m.row_sums();
  const std::size_t n = sums.size();
  // epsilon guards against p*n landing a hair above its mathematical value
  const auto to_remove =
      static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  std::vector<std::pair<std::string, Mass>> order(sums.begin(), sums.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first > b.first;
  });

  InteractionMatrix out(m.row_kind(), m.col_kind(), m.provenance());
  out.provenance().cutoffs.push_back("percentile=" + format_double(p));
  std::set<std::string> removed;
  for (std::size_t i = 0; i < std::min(to_remove, order.size()); ++i) {
    removed.insert(order[i].first);
  }
  for (const auto& [row, cols] : m.rows()) {
    if (removed.contains(row)) continue;
    for (const auto& [col, value] : cols) out.add(row, col, value);
  }
  return out;
}

InteractionMatrix threshold_cutoff(const InteractionMatrix& m, const Mass& min_total) {
  if (m.row_kind() != KeyKind::user) {
    throw MatrixError("threshold_cutoff applies to user-rowed matrices");
  }
  InteractionMatrix out(m.row_kind(), m.col_kind(), m.provenance());
  out.provenance().cutoffs.push_back("min_total=" + format_double(mass_to_double(min_total)));
  for (const auto& [row, cols] : m.rows()) {
    Mass sum = 0;
    for (const auto& [col, value] : cols) sum += value;
    if (sum < min_total) continue;
    for (const auto& [col, value] : cols) out.add(row, col, value);
  }
  return out;
}

std::vector<double> consumption_vector(const InteractionMatrix& user_to_outlet,
                                       const std::string& user, const MediaRegistry& registry,
                                       IdeologyFold fold) {
  const auto& rows = user_to_outlet.rows();
  auto it = rows.find(user);
  if (it == rows.end() || it->second.empty()) {
    throw MatrixError("consumption_vector: user row is empty: " + user);
  }
  const int dims = fold == IdeologyFold::seven_way ? kIdeologyCount : kIdeologyGroupCount;
  std::vector<Mass> sums(static_cast<std::size_t>(dims), Mass(0));
  Mass total = 0;
  for (const auto& [outlet_id, value] : it->second) {
    const MediaOutlet* outlet = registry.outlet_by_id(outlet_id);
    if (!outlet) throw MatrixError("unknown outlet in matrix: " + outlet_id);
    const int bin = fold == IdeologyFold::seven_way
                        ? static_cast<int>(outlet->ideology)
                        : static_cast<int>(ideology_group(outlet->ideology));
    sums[static_cast<std::size_t>(bin)] += value;
    total += value;
  }
  if (total == 0) throw MatrixError("consumption_vector: zero row for user " + user);
  std::vector<double> out(static_cast<std::size_t>(dims));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mass_to_double(sums[i] / total);
  }
  return out;
}

std::vector<InfoFlowEntry> info_flow(const InteractionMatrix& gpe_matrix) {
  if (gpe_matrix.row_kind() != gpe_matrix.col_kind()) {
    throw MatrixError("info_flow needs a square GPE-to-GPE matrix");
  }
  if (gpe_matrix.row_kind() != KeyKind::state && gpe_matrix.row_kind() != KeyKind::country) {
    throw MatrixError("info_flow rows must be states or countries");
  }

  std::set<std::string> gpes;
  std::map<std::string, Mass> consumed;
  std::map<std::string, Mass> supplied;
  for (const auto& [row, cols] : gpe_matrix.rows()) {
    gpes.insert(row);
    for (const auto& [col, value] : cols) {
      gpes.insert(col);
      if (row == col) continue;  // self-interactions removed
      consumed[row] += value;
      supplied[col] += value;
    }
  }

  std::vector<InfoFlowEntry> entries;
  entries.reserve(gpes.size());
  for (const auto& gpe : gpes) {
    InfoFlowEntry entry;
    entry.gpe = gpe;
    Mass c = consumed.count(gpe) ? consumed[gpe] : Mass(0);
    Mass s = supplied.count(gpe) ? supplied[gpe] : Mass(0);
    entry.consumed = mass_to_double(c);
    entry.supplied = mass_to_double(s);
    if (c > 0 && s > 0) {
      entry.ratio = std::log10(entry.consumed) - std::log10(entry.supplied);
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw MatrixError("cannot format double");
  return std::string(buf, ptr);
}

std::string matrix_to_csv(const InteractionMatrix& m) {
  std::string out = "row_key,col_key,value\n";
  for (const auto& [row, cols] : m.rows()) {
    for (const auto& [col, value] : cols) {
      out += csv::escape(row);
      out.push_back(',');
      out += csv::escape(col);
      out.push_back(',');
      out += format_double(mass_to_double(value));
      out.push_back('\n');
    }
  }
  return out;
}

std::string matrix_to_log10_csv(const InteractionMatrix& m) {
  std::string out = "row_key,col_key,log10_value\n";
  for (const auto& [row, cols] : m.rows()) {
    for (const auto& [col, value] : cols) {
      out += csv::escape(row);
      out.push_back(',');
      out += csv::escape(col);
      out.push_back(',');
      out += format_double(std::log10(mass_to_double(value)));
      out.push_back('\n');
    }
  }
  return out;
}

std::string matrix_sidecar_json(const InteractionMatrix& m) {
  json obj{{"row_type", std::string(to_string(m.row_kind()))},
           {"col_type", std::string(to_string(m.col_kind()))},
           {"scheme", std::string(to_string(m.provenance().scheme))},
           {"cutoffs", m.provenance().cutoffs}};
  return obj.dump(2);
}

void save_matrix(const InteractionMatrix& m, const std::filesystem::path& csv_path,
                 const std::filesystem::path& sidecar_path) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw MatrixError("cannot write " + csv_path.string());
    out << matrix_to_csv(m);
  }
  std::ofstream side(sidecar_path, std::ios::binary);
  if (!side) throw MatrixError("cannot write " + sidecar_path.string());
  side << matrix_sidecar_json(m);
}

InteractionMatrix load_matrix(const std::filesystem::path& csv_path,
                              const std::filesystem::path& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw MatrixError("cannot open " + sidecar_path.string());
  json meta = json::parse(side, nullptr, false);
  if (meta.is_discarded()) throw MatrixError("invalid sidecar " + sidecar_path.string());
  MatrixProvenance provenance;
  std::string scheme = meta.value("scheme", "weighted");
  if (scheme == "occurrence") provenance.scheme = Scheme::occurrence;
  else if (scheme == "country") provenance.scheme = Scheme::country;
  else provenance.scheme = Scheme::weighted;
  if (meta.contains("cutoffs")) {
    for (const auto& c : meta["cutoffs"]) provenance.cutoffs.push_back(c.get<std::string>());
  }
  InteractionMatrix m(key_kind_from_string(meta.value("row_type", "user")),
                      key_kind_from_string(meta.value("col_type", "outlet")),
                      std::move(provenance));

  csv::Table table = csv::read_file(csv_path);
  int row = table.column("row_key"), col = table.column("col_key"), val = table.column("value");
  if (row < 0 || col < 0 || val < 0) {
    throw MatrixError("triplet CSV needs row_key,col_key,value header");
  }
  for (const auto& r : table.rows) {
    if (r.size() < 3) continue;
    const std::string& text = r[static_cast<std::size_t>(val)];
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc()) throw MatrixError("bad value in triplet CSV: " + text);
    m.add(r[static_cast<std::size_t>(row)], r[static_cast<std::size_t>(col)],
          mass_from_double(value));
  }
  return m;
}

}  // namespace mediaflow
