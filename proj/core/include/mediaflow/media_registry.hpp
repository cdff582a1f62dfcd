#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mediaflow {

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seven-point political ideology scale.
enum class Ideology {
  extreme_left,
  left,
  center_left,
  center,
  center_right,
  right,
  extreme_right,
};
inline constexpr int kIdeologyCount = 7;

// Three-way fold used for global-level profiles.
enum class IdeologyGroup { left, center, right };
inline constexpr int kIdeologyGroupCount = 3;

IdeologyGroup ideology_group(Ideology ideology);

enum class Factuality { very_high, high, mostly_factual, mixed, low, very_low };
enum class Credibility { high, mixed, low, undetermined };
enum class Traffic { high, medium, low };

std::string_view to_string(Ideology);
std::string_view to_string(IdeologyGroup);
std::string_view to_string(Factuality);
std::string_view to_string(Credibility);
std::string_view to_string(Traffic);
Ideology ideology_from_string(std::string_view);
Factuality factuality_from_string(std::string_view);
Credibility credibility_from_string(std::string_view);
Traffic traffic_from_string(std::string_view);

// Factuality band of the 0-10 score (0 most factual). Throws on out-of-range.
Factuality factuality_category(int score);

struct MediaOutlet {
  std::string id;  // stable slug, unique registry-wide
  std::string name;
  std::string canonical_url;
  std::string country;
  std::optional<std::string> state;  // for state-level aggregation, when known
  Ideology ideology = Ideology::center;
  std::optional<int> factuality_score;         // 0-10
  std::optional<Factuality> factuality;        // derived from score when absent
  std::optional<Credibility> credibility;      // as rated; may be absent
  std::optional<Traffic> traffic;
  std::optional<int> failed_fact_checks;
  std::optional<bool> questionable;
  std::vector<std::string> handles;
};

// Rule-based credibility. Questionable sources are low regardless of other
// fields; "few" failed checks is <= 2, "many" is >= 3 (configurable via
// many_failed_checks). Returns undetermined when the deciding fields are
// missing.
Credibility classify_credibility(const MediaOutlet& outlet, int many_failed_checks = 3);

struct HandleCandidate {
  std::string handle;
  std::vector<std::string> urls;  // profile URLs, possibly shortened
};

// Offline stand-in for account search + URL redirection.
struct HandleResolutionFixture {
  std::unordered_map<std::string, std::vector<HandleCandidate>> searches;
  std::unordered_map<std::string, std::string> redirects;

  static HandleResolutionFixture load(const std::filesystem::path& path);
};

// Follows the redirect map to a fixed point. Throws RegistryError naming the
// URL on a cycle.
std::string resolve_redirects(const std::string& url,
                              const std::unordered_map<std::string, std::string>& redirects);

struct HandleResolution {
  std::vector<std::string> handles;  // sorted, deduplicated
  std::vector<std::string> warnings;
};

// Checks at most the first 10 search candidates for the outlet's name; a
// candidate matches when any of its profile URLs redirect-resolves to the
// outlet's registrable domain.
HandleResolution resolve_handles(const MediaOutlet& outlet,
                                 const HandleResolutionFixture& fixture,
                                 std::size_t top_n = 10);

class MediaRegistry {
 public:
  static MediaRegistry from_outlets(std::vector<MediaOutlet> outlets);
  static MediaRegistry load_json(const std::filesystem::path& path);
  static MediaRegistry load_csv(const std::filesystem::path& path);

  const std::vector<MediaOutlet>& outlets() const { return outlets_; }
  const MediaOutlet* outlet_by_id(std::string_view id) const;
  // Handle lookup is case-insensitive, as Twitter handles are.
  const MediaOutlet* outlet_for_handle(std::string_view handle) const;
  const MediaOutlet* outlet_for_url(std::string_view url) const;

  // Total mapping handle -> outlet id over all registered handles.
  std::unordered_map<std::string, std::string> handle_to_outlet() const;

  std::string to_json() const;

 private:
  std::vector<MediaOutlet> outlets_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_handle_;  // lowercased
  std::unordered_map<std::string, std::size_t> by_domain_;  // registrable domain
};

}  // namespace mediaflow
