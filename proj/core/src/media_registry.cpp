#include "mediaflow/media_registry.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mediaflow/csv.hpp"
#include "mediaflow/url.hpp"

namespace mediaflow {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RegistryError("cannot open file: " + path.string());
  json obj = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) throw RegistryError("invalid JSON in " + path.string());
  return obj;
}

}  // namespace

IdeologyGroup ideology_group(Ideology ideology) {
  switch (ideology) {
    case Ideology::extreme_left:
    case Ideology::left:
    case Ideology::center_left:
      return IdeologyGroup::left;
    case Ideology::center:
      return IdeologyGroup::center;
    case Ideology::center_right:
    case Ideology::right:
    case Ideology::extreme_right:
      return IdeologyGroup::right;
  }
  throw RegistryError("invalid ideology value");
}

std::string_view to_string(Ideology v) {
  switch (v) {
    case Ideology::extreme_left: return "extreme-left";
    case Ideology::left: return "left";
    case Ideology::center_left: return "center-left";
    case Ideology::center: return "center";
    case Ideology::center_right: return "center-right";
    case Ideology::right: return "right";
    case Ideology::extreme_right: return "extreme-right";
  }
  return "?";
}

std::string_view to_string(IdeologyGroup v) {
  switch (v) {
    case IdeologyGroup::left: return "left";
    case IdeologyGroup::center: return "center";
    case IdeologyGroup::right: return "right";
  }
  return "?";
}

std::string_view to_string(Factuality v) {
  switch (v) {
    case Factuality::very_high: return "very-high";
    case Factuality::high: return "high";
    case Factuality::mostly_factual: return "mostly-factual";
    case Factuality::mixed: return "mixed";
    case Factuality::low: return "low";
    case Factuality::very_low: return "very-low";
  }
  return "?";
}

std::string_view to_string(Credibility v) {
  switch (v) {
    case Credibility::high: return "high";
    case Credibility::mixed: return "mixed";
    case Credibility::low: return "low";
    case Credibility::undetermined: return "undetermined";
  }
  return "?";
}

std::string_view to_string(Traffic v) {
  switch (v) {
    case Traffic::high: return "high";
    case Traffic::medium: return "medium";
    case Traffic::low: return "low";
  }
  return "?";
}

Ideology ideology_from_string(std::string_view s) {
  std::string v = lower(s);
  std::replace(v.begin(), v.end(), '_', '-');
  if (v == "extreme-left") return Ideology::extreme_left;
  if (v == "left") return Ideology::left;
  if (v == "center-left" || v == "leftcenter" || v == "left-center") return Ideology::center_left;
  if (v == "center" || v == "least-biased") return Ideology::center;
  if (v == "center-right" || v == "right-center") return Ideology::center_right;
  if (v == "right") return Ideology::right;
  if (v == "extreme-right") return Ideology::extreme_right;
  throw RegistryError("unknown ideology: " + std::string(s));
}

Factuality factuality_from_string(std::string_view s) {
  std::string v = lower(s);
  std::replace(v.begin(), v.end(), '_', '-');
  if (v == "very-high") return Factuality::very_high;
  if (v == "high") return Factuality::high;
  if (v == "mostly-factual") return Factuality::mostly_factual;
  if (v == "mixed") return Factuality::mixed;
  if (v == "low") return Factuality::low;
  if (v == "very-low") return Factuality::very_low;
  throw RegistryError("unknown factuality: " + std::string(s));
}

Credibility credibility_from_string(std::string_view s) {
  std::string v = lower(s);
  if (v == "high") return Credibility::high;
  if (v == "mixed") return Credibility::mixed;
  if (v == "low") return Credibility::low;
  if (v == "undetermined") return Credibility::undetermined;
  throw RegistryError("unknown credibility: " + std::string(s));
}

Traffic traffic_from_string(std::string_view s) {
  std::string v = lower(s);
  if (v == "high") return Traffic::high;
  if (v == "medium") return Traffic::medium;
  if (v == "low") return Traffic::low;
  throw RegistryError("unknown traffic: " + std::string(s));
}

Factuality factuality_category(int score) {
  if (score < 0 || score > 10) {
    throw RegistryError("factuality score out of range [0,10]: " + std::to_string(score));
  }
  if (score == 0) return Factuality::very_high;
  if (score <= 2) return Factuality::high;
  if (score <= 4) return Factuality::mostly_factual;
  if (score <= 6) return Factuality::mixed;
  if (score <= 9) return Factuality::low;
  return Factuality::very_low;
}

Credibility classify_credibility(const MediaOutlet& outlet, int many_failed_checks) {
  // Questionable/conspiracy sources are low no matter what else is known.
  if (outlet.questionable.value_or(false)) return Credibility::low;

  std::optional<Factuality> fact = outlet.factuality;
  if (!fact && outlet.factuality_score) fact = factuality_category(*outlet.factuality_score);
  if (!fact) return Credibility::undetermined;

  if (*fact == Factuality::very_high || *fact == Factuality::high) return Credibility::high;
  if (*fact == Factuality::low || *fact == Factuality::very_low) return Credibility::low;

  const bool lean_sided = outlet.ideology != Ideology::center;
  if (*fact == Factuality::mostly_factual) {
    if (!outlet.traffic) return Credibility::undetermined;
    if (*outlet.traffic == Traffic::high || *outlet.traffic == Traffic::medium) {
      return Credibility::high;
    }
    if (lean_sided) return Credibility::mixed;
    return Credibility::undetermined;
  }

  // mixed factuality
  if (!outlet.traffic) return Credibility::undetermined;
  if (*outlet.traffic == Traffic::high || *outlet.traffic == Traffic::medium) {
    return Credibility::mixed;
  }
  if (!outlet.failed_fact_checks) return Credibility::undetermined;
  return *outlet.failed_fact_checks >= many_failed_checks ? Credibility::low
                                                          : Credibility::mixed;
}

HandleResolutionFixture HandleResolutionFixture::load(const std::filesystem::path& path) {
  json obj = read_json_file(path);
  HandleResolutionFixture fixture;
  if (auto searches = obj.find("searches"); searches != obj.end() && searches->is_object()) {
    for (const auto& [query, candidates] : searches->items()) {
      std::vector<HandleCandidate> list;
      for (const auto& c : candidates) {
        HandleCandidate candidate;
        candidate.handle = c.value("handle", "");
        if (auto urls = c.find("urls"); urls != c.end() && urls->is_array()) {
          for (const auto& u : *urls) candidate.urls.push_back(u.get<std::string>());
        }
        list.push_back(std::move(candidate));
      }
      fixture.searches.emplace(query, std::move(list));
    }
  }
  if (auto redirects = obj.find("redirects"); redirects != obj.end() && redirects->is_object()) {
    for (const auto& [from, to] : redirects->items()) {
      fixture.redirects.emplace(from, to.get<std::string>());
    }
  }
  return fixture;
}

std::string resolve_redirects(const std::string& url,
                              const std::unordered_map<std::string, std::string>& redirects) {
  std::string current = url;
  std::set<std::string> seen{current};
  for (;;) {
    auto it = redirects.find(current);
    if (it == redirects.end()) return current;
    current = it->second;
    if (!seen.insert(current).second) {
      throw RegistryError("redirect cycle at URL: " + current);
    }
  }
}

HandleResolution resolve_handles(const MediaOutlet& outlet,
                                 const HandleResolutionFixture& fixture, std::size_t top_n) {
  HandleResolution result;
  auto it = fixture.searches.find(outlet.name);
  if (it == fixture.searches.end()) {
    result.warnings.push_back("no search results for query: " + outlet.name);
    return result;
  }
  const std::string target = url::registrable_domain(outlet.canonical_url);
  std::set<std::string> matched;
  const std::size_t limit = std::min(top_n, it->second.size());
  for (std::size_t i = 0; i < limit; ++i) {
    const HandleCandidate& candidate = it->second[i];
    for (const auto& profile_url : candidate.urls) {
      std::string final_url = resolve_redirects(profile_url, fixture.redirects);
      if (!target.empty() && url::registrable_domain(final_url) == target) {
        matched.insert(candidate.handle);
        break;
      }
    }
  }
  result.handles.assign(matched.begin(), matched.end());
  return result;
}

MediaRegistry MediaRegistry::from_outlets(std::vector<MediaOutlet> outlets) {
  MediaRegistry registry;
  registry.outlets_ = std::move(outlets);
  for (std::size_t i = 0; i < registry.outlets_.size(); ++i) {
    MediaOutlet& outlet = registry.outlets_[i];
    if (outlet.id.empty()) throw RegistryError("outlet without id: " + outlet.name);
    if (!outlet.factuality && outlet.factuality_score) {
      outlet.factuality = factuality_category(*outlet.factuality_score);
    }
    if (!registry.by_id_.emplace(outlet.id, i).second) {
      throw RegistryError("duplicate outlet id: " + outlet.id);
    }
    for (const auto& handle : outlet.handles) {
      auto [it, inserted] = registry.by_handle_.emplace(lower(handle), i);
      if (!inserted && it->second != i) {
        throw RegistryError("handle '" + handle + "' claimed by outlets '" +
                            registry.outlets_[it->second].id + "' and '" + outlet.id + "'");
      }
    }
    std::string domain = url::registrable_domain(outlet.canonical_url);
    if (!domain.empty()) {
      auto [it, inserted] = registry.by_domain_.emplace(domain, i);
      if (!inserted && it->second != i) {
        throw RegistryError("domain '" + domain + "' claimed by outlets '" +
                            registry.outlets_[it->second].id + "' and '" + outlet.id + "'");
      }
    }
  }
  return registry;
}

const MediaOutlet* MediaRegistry::outlet_by_id(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &outlets_[it->second];
}

const MediaOutlet* MediaRegistry::outlet_for_handle(std::string_view handle) const {
  auto it = by_handle_.find(lower(handle));
  return it == by_handle_.end() ? nullptr : &outlets_[it->second];
}

const MediaOutlet* MediaRegistry::outlet_for_url(std::string_view u) const {
  std::string domain = url::registrable_domain(u);
  if (domain.empty()) return nullptr;
  auto it = by_domain_.find(domain);
  return it == by_domain_.end() ? nullptr : &outlets_[it->second];
}

std::unordered_map<std::string, std::string> MediaRegistry::handle_to_outlet() const {
  std::unordered_map<std::string, std::string> map;
  map.reserve(by_handle_.size());
  for (const auto& [handle, idx] : by_handle_) map.emplace(handle, outlets_[idx].id);
  return map;
}

namespace {

MediaOutlet outlet_from_json(const json& o) {
  MediaOutlet outlet;
  outlet.id = o.value("id", "");
  outlet.name = o.value("name", outlet.id);
  outlet.canonical_url = o.value("url", o.value("canonical_url", ""));
  outlet.country = o.value("country", "");
  if (o.contains("state") && o["state"].is_string() && !o["state"].get<std::string>().empty()) {
    outlet.state = o["state"].get<std::string>();
  }
  outlet.ideology = ideology_from_string(o.value("ideology", "center"));
  if (o.contains("factuality_score") && o["factuality_score"].is_number_integer()) {
    outlet.factuality_score = o["factuality_score"].get<int>();
  }
  if (o.contains("factuality") && o["factuality"].is_string()) {
    outlet.factuality = factuality_from_string(o["factuality"].get<std::string>());
  }
  if (o.contains("credibility") && o["credibility"].is_string()) {
    outlet.credibility = credibility_from_string(o["credibility"].get<std::string>());
  }
  if (o.contains("traffic") && o["traffic"].is_string()) {
    outlet.traffic = traffic_from_string(o["traffic"].get<std::string>());
  }
  if (o.contains("failed_fact_checks") && o["failed_fact_checks"].is_number_integer()) {
    outlet.failed_fact_checks = o["failed_fact_checks"].get<int>();
  }
  if (o.contains("questionable") && o["questionable"].is_boolean()) {
    outlet.questionable = o["questionable"].get<bool>();
  }
  if (auto handles = o.find("handles"); handles != o.end() && handles->is_array()) {
    for (const auto& h : *handles) outlet.handles.push_back(h.get<std::string>());
  }
  return outlet;
}

}  // namespace

MediaRegistry MediaRegistry::load_json(const std::filesystem::path& path) {
  json obj = read_json_file(path);
  const json& list = obj.is_array() ? obj : obj.at("outlets");
  std::vector<MediaOutlet> outlets;
  outlets.reserve(list.size());
  for (const auto& o : list) outlets.push_back(outlet_from_json(o));
  return from_outlets(std::move(outlets));
}

MediaRegistry MediaRegistry::load_csv(const std::filesystem::path& path) {
  csv::Table table = csv::read_file(path);
  auto col = [&](const char* name) { return table.column(name); };
  const int id = col("id"), name = col("name"), url_col = col("url"),
            country = col("country"), state = col("state"), ideology = col("ideology"),
            score = col("factuality_score"), credibility = col("credibility"),
            traffic = col("traffic"), failed = col("failed_fact_checks"),
            questionable = col("questionable"), handles = col("handles");
  if (id < 0 || url_col < 0 || country < 0 || ideology < 0) {
    throw RegistryError("registry CSV needs at least id,url,country,ideology columns");
  }
  std::vector<MediaOutlet> outlets;
  for (const auto& row : table.rows) {
    auto get = [&](int idx) -> std::string {
      if (idx < 0 || idx >= static_cast<int>(row.size())) return {};
      return row[static_cast<std::size_t>(idx)];
    };
    MediaOutlet outlet;
    outlet.id = get(id);
    outlet.name = name >= 0 && !get(name).empty() ? get(name) : outlet.id;
    outlet.canonical_url = get(url_col);
    outlet.country = get(country);
    if (!get(state).empty()) outlet.state = get(state);
    outlet.ideology = ideology_from_string(get(ideology));
    if (!get(score).empty()) outlet.factuality_score = std::stoi(get(score));
    if (!get(credibility).empty()) {
      outlet.credibility = credibility_from_string(get(credibility));
    }
    if (!get(traffic).empty()) outlet.traffic = traffic_from_string(get(traffic));
    if (!get(failed).empty()) outlet.failed_fact_checks = std::stoi(get(failed));
    if (!get(questionable).empty()) {
      outlet.questionable = get(questionable) == "true" || get(questionable) == "1";
    }
    if (!get(handles).empty()) {
      // handles are ;-separated inside one CSV field
      std::string field = get(handles);
      std::size_t start = 0;
      while (start <= field.size()) {
        std::size_t end = field.find(';', start);
        if (end == std::string::npos) end = field.size();
        if (end > start) outlet.handles.push_back(field.substr(start, end - start));
        start = end + 1;
      }
    }
    outlets.push_back(std::move(outlet));
  }
  return from_outlets(std::move(outlets));
}

std::string MediaRegistry::to_json() const {
  json list = json::array();
  for (const auto& o : outlets_) {
    json entry{{"id", o.id},
               {"name", o.name},
               {"url", o.canonical_url},
               {"country", o.country},
               {"ideology", std::string(to_string(o.ideology))}};
    if (o.state) entry["state"] = *o.state;
    if (o.factuality_score) entry["factuality_score"] = *o.factuality_score;
    if (o.factuality) entry["factuality"] = std::string(to_string(*o.factuality));
    if (o.credibility) entry["credibility"] = std::string(to_string(*o.credibility));
    if (o.traffic) entry["traffic"] = std::string(to_string(*o.traffic));
    if (o.failed_fact_checks) entry["failed_fact_checks"] = *o.failed_fact_checks;
    if (o.questionable) entry["questionable"] = *o.questionable;
    entry["handles"] = o.handles;
    list.push_back(std::move(entry));
  }
  return json{{"outlets", list}}.dump(2);
}

}  // namespace mediaflow
