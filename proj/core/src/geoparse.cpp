#include "mediaflow/geoparse.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "mediaflow/csv.hpp"

namespace mediaflow {

namespace {

// Maps common Latin-1 / Latin Extended-A code points to their base letter.
// Enough for gazetteer data; anything unmapped passes through unchanged.
void append_folded(std::string& out, char32_t cp) {
  static const std::unordered_map<char32_t, const char*> kFold = {
      {U'à', "a"}, {U'á', "a"}, {U'â', "a"}, {U'ã', "a"}, {U'ä', "a"}, {U'å', "a"},
      {U'ç', "c"}, {U'è', "e"}, {U'é', "e"}, {U'ê', "e"}, {U'ë', "e"}, {U'ì', "i"},
      {U'í', "i"}, {U'î', "i"}, {U'ï', "i"}, {U'ñ', "n"}, {U'ò', "o"}, {U'ó', "o"},
      {U'ô', "o"}, {U'õ', "o"}, {U'ö', "o"}, {U'ø', "o"}, {U'ù', "u"}, {U'ú', "u"},
      {U'û', "u"}, {U'ü', "u"}, {U'ý', "y"}, {U'ÿ', "y"}, {U'ā', "a"}, {U'ă', "a"},
      {U'ą', "a"}, {U'ć', "c"}, {U'č', "c"}, {U'ď', "d"}, {U'đ', "d"}, {U'ē', "e"},
      {U'ė', "e"}, {U'ę', "e"}, {U'ě', "e"}, {U'ğ', "g"}, {U'ī', "i"}, {U'į', "i"},
      {U'ı', "i"}, {U'ł', "l"}, {U'ń', "n"}, {U'ň', "n"}, {U'ō', "o"}, {U'ő', "o"},
      {U'œ', "oe"}, {U'ŕ', "r"}, {U'ř', "r"}, {U'ś', "s"}, {U'ş', "s"}, {U'š', "s"},
      {U'ť', "t"}, {U'ū', "u"}, {U'ů', "u"}, {U'ű', "u"}, {U'ź', "z"}, {U'ż', "z"},
      {U'ž', "z"}, {U'ß', "ss"}, {U'æ', "ae"}, {U'þ', "th"}, {U'ð', "d"},
  };
  if (cp < 0x80) {
    char c = static_cast<char>(cp);
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    out.push_back(c);
    return;
  }
  // Uppercase accented letters: fold to lowercase first (Latin-1 block and
  // the even/odd pairing of Latin Extended-A).
  char32_t lower = cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
    lower = cp + 0x20;
  } else if (cp >= 0x100 && cp < 0x180) {
    lower = (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (auto it = kFold.find(lower); it != kFold.end()) {
    out += it->second;
    return;
  }
  // Pass through as UTF-8.
  if (lower < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (lower >> 6)));
    out.push_back(static_cast<char>(0x80 | (lower & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (lower >> 12)));
    out.push_back(static_cast<char>(0x80 | ((lower >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (lower & 0x3F)));
  }
}

bool is_punct_ascii(char c) {
  switch (c) {
    case '.': case '\'': case '"': case '!': case '?': case '(': case ')':
    case '[': case ']': case '{': case '}': case '#': case '@': case '*':
    case '+': case '~': case '^': case '<': case '>': case ';': case ':':
    case '_': case '=': case '%': case '$': case '&': case '`':
      return true;
    default:
      return false;
  }
}

std::vector<std::string> tokenize(std::string_view description) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    std::string norm = normalize_place_name(current);
    if (!norm.empty()) tokens.push_back(std::move(norm));
    current.clear();
  };
  for (char c : description) {
    if (c == ',' || c == '/' || c == '|') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> distinct_countries(const std::vector<Place>& places) {
  std::set<std::string> countries;
  for (const auto& p : places) countries.insert(p.country);
  return {countries.begin(), countries.end()};
}

// Places filtered to one country; yields the state only when unambiguous.
Resolved resolve_within_country(const std::vector<Place>& places, const std::string& country) {
  std::set<std::string> states;
  for (const auto& p : places) {
    if (p.country == country) states.insert(p.state);
  }
  if (states.size() == 1) return Resolved{country, *states.begin()};
  return Resolved{country, ""};
}

// True when edit distance (insert/delete/substitute) is <= 1.
bool within_edit_distance_one(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (b.size() - a.size() > 1) return false;
  std::size_t i = 0;
  while (i < a.size() && a[i] == b[i]) ++i;
  if (i == a.size()) return true;  // equal, or b has one extra trailing char
  if (a.size() == b.size()) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (a[j] != b[j]) return false;  // more than one substitution
    }
    return true;
  }
  for (std::size_t j = i; j < a.size(); ++j) {
    if (a[j] != b[j + 1]) return false;  // more than one insertion
  }
  return true;
}

}  // namespace

std::string normalize_place_name(std::string_view raw) {
  // Decode UTF-8, fold case/diacritics, drop punctuation, collapse blanks.
  std::string folded;
  folded.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    unsigned char c = static_cast<unsigned char>(raw[i]);
    char32_t cp = 0;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < raw.size()) {
      cp = static_cast<char32_t>((c & 0x1F) << 6 |
                                 (static_cast<unsigned char>(raw[i + 1]) & 0x3F));
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < raw.size()) {
      cp = static_cast<char32_t>((c & 0x0F) << 12 |
                                 (static_cast<unsigned char>(raw[i + 1]) & 0x3F) << 6 |
                                 (static_cast<unsigned char>(raw[i + 2]) & 0x3F));
      len = 3;
    } else {
      // 4-byte sequences (emoji etc.) and invalid bytes become separators
      cp = U' ';
      while (i + len < raw.size() &&
             (static_cast<unsigned char>(raw[i + len]) & 0xC0) == 0x80) {
        ++len;
      }
    }
    if (cp < 0x80 && is_punct_ascii(static_cast<char>(cp))) {
      folded.push_back(' ');
    } else {
      append_folded(folded, cp);
    }
    i += len;
  }
  // collapse whitespace, trim
  std::string out;
  out.reserve(folded.size());
  bool pending_space = false;
  for (char c : folded) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

Gazetteer Gazetteer::build(std::span<const GazetteerRow> rows,
                           const std::vector<std::pair<std::string, std::string>>& aliases) {
  if (rows.empty()) throw GazetteerError("gazetteer rows are empty");
  Gazetteer g;

  auto add_key = [&](const std::string& key, const Place& place) {
    if (key.empty()) return;
    auto& places = g.index_[key];
    if (std::find(places.begin(), places.end(), place) == places.end()) {
      places.push_back(place);
    }
  };

  std::set<std::pair<std::string, Place>> seen_states;
  std::set<std::string> seen_countries;

  for (const auto& row : rows) {
    if (row.country.empty()) throw GazetteerError("gazetteer row without a country");
    const std::string city = normalize_place_name(row.city);
    const std::string state = normalize_place_name(row.state);
    const std::string country = normalize_place_name(row.country);
    const Place full{row.country, row.state};
    const Place country_only{row.country, ""};

    add_key(city, full);
    if (!state.empty()) add_key(state, full);
    add_key(country, country_only);

    // Comma-combinations of the names present, in city,state,country order.
    if (!city.empty() && !state.empty()) add_key(city + ", " + state, full);
    if (!city.empty()) add_key(city + ", " + country, full);
    if (!state.empty()) add_key(state + ", " + country, full);
    if (!city.empty() && !state.empty()) {
      add_key(city + ", " + state + ", " + country, full);
    }

    if (!state.empty() && seen_states.insert({state, full}).second) {
      g.state_names_.emplace_back(state, full);
    }
    if (seen_countries.insert(country).second) {
      g.country_names_.emplace_back(country, country_only);
    }
  }

  std::vector<std::string> collisions;
  for (const auto& [alias, canonical] : aliases) {
    std::string key = normalize_place_name(alias);
    std::string value = normalize_place_name(canonical);
    if (key.empty() || value.empty()) continue;
    auto [it, inserted] = g.aliases_.try_emplace(key, value);
    if (!inserted && it->second != value) {
      collisions.push_back(alias + " -> {" + it->second + ", " + value + "}");
    }
  }
  if (!collisions.empty()) {
    std::string message = "conflicting gazetteer aliases:";
    for (const auto& c : collisions) message += " " + c + ";";
    throw GazetteerError(message);
  }
  return g;
}

Gazetteer Gazetteer::load_csv(const std::filesystem::path& gazetteer_csv,
                              const std::optional<std::filesystem::path>& alias_csv) {
  csv::Table table = csv::read_file(gazetteer_csv);
  int city = table.column("city");
  int state = table.column("state");
  int country = table.column("country");
  if (city < 0 || state < 0 || country < 0) {
    throw GazetteerError("gazetteer CSV must have header city,state,country");
  }
  std::vector<GazetteerRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    auto get = [&](int idx) {
      return idx < static_cast<int>(r.size()) ? r[static_cast<std::size_t>(idx)]
                                              : std::string{};
    };
    rows.push_back(GazetteerRow{get(city), get(state), get(country)});
  }

  std::vector<std::pair<std::string, std::string>> aliases;
  if (alias_csv) {
    csv::Table atab = csv::read_file(*alias_csv);
    int alias = atab.column("alias");
    int canonical = atab.column("canonical");
    if (alias < 0 || canonical < 0) {
      throw GazetteerError("alias CSV must have header alias,canonical");
    }
    for (const auto& r : atab.rows) {
      if (r.size() < 2) continue;
      aliases.emplace_back(r[static_cast<std::size_t>(alias)],
                           r[static_cast<std::size_t>(canonical)]);
    }
  }
  return build(rows, aliases);
}

const std::vector<Place>* Gazetteer::lookup(std::string_view normalized_key) const {
  auto it = index_.find(std::string(normalized_key));
  return it == index_.end() ? nullptr : &it->second;
}

LocationResolution parse_location(std::string_view description, const Gazetteer& gazetteer) {
  std::vector<std::string> tokens = tokenize(description);
  for (auto& token : tokens) {
    if (auto it = gazetteer.aliases().find(token); it != gazetteer.aliases().end()) {
      token = it->second;
    }
  }
  if (tokens.empty()) return Unknown{};

  // Phase 1: exact keys, longest combination first, leftmost window first.
  const std::size_t n = tokens.size();
  for (std::size_t len = std::min<std::size_t>(n, 3); len >= 1; --len) {
    for (std::size_t start = 0; start + len <= n; ++start) {
      std::string key = tokens[start];
      for (std::size_t i = 1; i < len; ++i) key += ", " + tokens[start + i];
      const std::vector<Place>* places = gazetteer.lookup(key);
      if (!places) continue;

      std::vector<std::string> countries = distinct_countries(*places);
      if (countries.size() == 1) {
        return resolve_within_country(*places, countries.front());
      }

      // Multi-country name: another token must corroborate exactly one
      // candidate. Corroborating state tokens also pin the state.
      std::set<std::string> survivors;
      std::string corroborated_state;
      for (std::size_t t = 0; t < n; ++t) {
        if (t >= start && t < start + len) continue;
        const std::vector<Place>* other = gazetteer.lookup(tokens[t]);
        if (!other) continue;
        for (const auto& place : *other) {
          if (std::find(countries.begin(), countries.end(), place.country) !=
              countries.end()) {
            survivors.insert(place.country);
            if (!place.state.empty() &&
                normalize_place_name(place.state) == tokens[t]) {
              corroborated_state = place.state;
            }
          }
        }
      }
      if (survivors.size() == 1) {
        Resolved resolved = resolve_within_country(*places, *survivors.begin());
        if (resolved.state.empty()) resolved.state = corroborated_state;
        return resolved;
      }
      return Ambiguous{countries};
    }
  }

  // Phase 2: fuzzy fallback against state and country names only.
  std::set<Place> candidates;
  auto scan = [&](const std::vector<std::pair<std::string, Place>>& names) {
    for (const auto& token : tokens) {
      for (const auto& [name, place] : names) {
        if (within_edit_distance_one(token, name)) candidates.insert(place);
      }
    }
  };
  scan(gazetteer.state_names());
  scan(gazetteer.country_names());

  if (candidates.empty()) return Unknown{};
  std::set<std::string> countries;
  for (const auto& p : candidates) countries.insert(p.country);
  if (countries.size() > 1) {
    return Ambiguous{{countries.begin(), countries.end()}};
  }
  std::set<std::string> states;
  for (const auto& p : candidates) states.insert(p.state);
  if (states.size() == 1) return Resolved{*countries.begin(), *states.begin()};
  return Resolved{*countries.begin(), ""};
}

LocationResolution LocationResolver::resolve(const std::string& description) {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(description); it != cache_.end()) return it->second;
  }
  LocationResolution resolution = parse_location(description, gazetteer_);
  std::lock_guard lock(mu_);
  return cache_.try_emplace(description, std::move(resolution)).first->second;
}

std::size_t LocationResolver::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

CorpusStats corpus_stats(std::span<const ResolutionWithMultiplicity> resolutions) {
  CorpusStats stats;
  for (const auto& entry : resolutions) {
    auto bump = [&](CorpusBucket& bucket) {
      bucket.unique += 1;
      bucket.weighted += entry.user_count;
    };
    if (const auto* resolved = std::get_if<Resolved>(&entry.resolution)) {
      bump(stats.resolved);
      if (!resolved->state.empty()) bump(stats.resolved_with_state);
    } else if (std::holds_alternative<Ambiguous>(entry.resolution)) {
      bump(stats.ambiguous);
    } else {
      bump(stats.unknown);
    }
  }
  return stats;
}

std::string corpus_stats_json(const CorpusStats& stats) {
  nlohmann::json obj{
      {"resolved", {{"unique", stats.resolved.unique}, {"weighted", stats.resolved.weighted}}},
      {"resolved_with_state",
       {{"unique", stats.resolved_with_state.unique},
        {"weighted", stats.resolved_with_state.weighted}}},
      {"ambiguous",
       {{"unique", stats.ambiguous.unique}, {"weighted", stats.ambiguous.weighted}}},
      {"unknown", {{"unique", stats.unknown.unique}, {"weighted", stats.unknown.weighted}}},
  };
  return obj.dump(2);
}

}  // namespace mediaflow
