#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace mediaflow {

class GazetteerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GazetteerRow {
  std::string city;
  std::string state;  // may be empty
  std::string country;
};

struct Place {
  std::string country;
  std::string state;  // empty when unknown

  auto operator<=>(const Place&) const = default;
};

struct Resolved {
  std::string country;
  std::string state;  // empty when no state was determined

  bool operator==(const Resolved&) const = default;
};

struct Ambiguous {
  std::vector<std::string> countries;  // >= 2, sorted

  bool operator==(const Ambiguous&) const = default;
};

struct Unknown {
  bool operator==(const Unknown&) const = default;
};

using LocationResolution = std::variant<Resolved, Ambiguous, Unknown>;

// Casefold, strip diacritics and punctuation, collapse whitespace. Applied
// identically when building index keys and when tokenizing queries.
std::string normalize_place_name(std::string_view raw);

class Gazetteer {
 public:
  // Index keys are every single name (city, state, country) and every
  // comma-combination of the names present in a row, all normalized.
  // Aliases (normalized alias -> canonical token) are substituted into query
  // tokens before lookup; a conflicting duplicate alias fails the build.
  static Gazetteer build(std::span<const GazetteerRow> rows,
                         const std::vector<std::pair<std::string, std::string>>& aliases = {});

  static Gazetteer load_csv(const std::filesystem::path& gazetteer_csv,
                            const std::optional<std::filesystem::path>& alias_csv = {});

  const std::vector<Place>* lookup(std::string_view normalized_key) const;

  std::size_t key_count() const { return index_.size(); }
  const std::unordered_map<std::string, std::string>& aliases() const { return aliases_; }

  // Normalized names used by the fuzzy fallback (phase 2).
  const std::vector<std::pair<std::string, Place>>& state_names() const { return state_names_; }
  const std::vector<std::pair<std::string, Place>>& country_names() const {
    return country_names_;
  }

 private:
  std::unordered_map<std::string, std::vector<Place>> index_;
  std::unordered_map<std::string, std::string> aliases_;
  std::vector<std::pair<std::string, Place>> state_names_;
  std::vector<std::pair<std::string, Place>> country_names_;
};

// Two-phase resolution: exact combination lookup (longest first, with
// cross-token corroboration for multi-country names), then a fuzzy fallback
// at edit distance <= 1 against state and country names only. The fallback
// never overrides an Ambiguous phase-1 outcome.
LocationResolution parse_location(std::string_view description, const Gazetteer& gazetteer);

// Memoizing wrapper; descriptions repeat heavily across users.
class LocationResolver {
 public:
  explicit LocationResolver(const Gazetteer& gazetteer) : gazetteer_(gazetteer) {}

  LocationResolution resolve(const std::string& description);
  std::size_t cache_size() const;

 private:
  const Gazetteer& gazetteer_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, LocationResolution> cache_;
};

struct CorpusBucket {
  std::uint64_t unique = 0;
  std::uint64_t weighted = 0;
};

// Counts partition the input; resolved_with_state is the subset of resolved
// that carries a state.
struct CorpusStats {
  CorpusBucket resolved;
  CorpusBucket resolved_with_state;
  CorpusBucket ambiguous;
  CorpusBucket unknown;
};

struct ResolutionWithMultiplicity {
  LocationResolution resolution;
  std::uint64_t user_count = 1;
};

CorpusStats corpus_stats(std::span<const ResolutionWithMultiplicity> resolutions);

std::string corpus_stats_json(const CorpusStats& stats);

}  // namespace mediaflow
