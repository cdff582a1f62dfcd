#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "mediaflow/geoparse.hpp"

using namespace mediaflow;

namespace {

const std::filesystem::path kFixtures = MEDIAFLOW_FIXTURE_DIR;

Gazetteer fixture_gazetteer() {
  return Gazetteer::load_csv(kFixtures / "gazetteer.csv", kFixtures / "aliases.csv");
}

bool resolved_to(const LocationResolution& r, const std::string& country,
                 const std::string& state = "") {
  const auto* resolved = std::get_if<Resolved>(&r);
  return resolved && resolved->country == country && resolved->state == state;
}

}  // namespace

TEST_CASE("normalization folds case, diacritics, punctuation and whitespace") {
  CHECK(normalize_place_name("  CAMBRIDGE ") == "cambridge");
  CHECK(normalize_place_name("Île-de-France") == "ile-de-france");
  CHECK(normalize_place_name("São Paulo!!") == "sao paulo");
  CHECK(normalize_place_name("new    york") == "new york");
  CHECK(normalize_place_name("U.S.A.") == "u s a");
  CHECK(normalize_place_name("") == "");
}

TEST_CASE("bare Cambridge is indexed under multiple countries") {
  auto g = fixture_gazetteer();
  const auto* places = g.lookup("cambridge");
  REQUIRE(places != nullptr);
  std::set<std::string> countries;
  for (const auto& p : *places) countries.insert(p.country);
  CHECK(countries == std::set<std::string>{"United States", "United Kingdom", "New Zealand",
                                           "Canada"});
}

TEST_CASE("empty alias table leaves only combination keys") {
  std::vector<GazetteerRow> rows{{"Springfield", "Illinois", "United States"}};
  auto g = Gazetteer::build(rows);
  CHECK(g.aliases().empty());
  // springfield, illinois, united states + 4 combinations
  CHECK(g.key_count() == 7);
}

TEST_CASE("gazetteer key count matches a brute-force enumeration") {
  auto table_path = kFixtures / "gazetteer.csv";
  auto g = Gazetteer::load_csv(table_path);

  // independent enumeration of expected keys
  std::set<std::string> expected;
  std::ifstream in(table_path);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto first = line.find(',');
    auto second = line.find(',', first + 1);
    std::string city = normalize_place_name(line.substr(0, first));
    std::string state = normalize_place_name(line.substr(first + 1, second - first - 1));
    std::string country = normalize_place_name(line.substr(second + 1));
    expected.insert(city);
    if (!state.empty()) expected.insert(state);
    expected.insert(country);
    if (!state.empty()) expected.insert(city + ", " + state);
    expected.insert(city + ", " + country);
    if (!state.empty()) expected.insert(state + ", " + country);
    if (!state.empty()) expected.insert(city + ", " + state + ", " + country);
  }
  CHECK(g.key_count() == expected.size());
  for (const auto& key : expected) {
    INFO("missing key: ", key);
    CHECK(g.lookup(key) != nullptr);
  }
}

TEST_CASE("conflicting duplicate aliases fail the build with the collisions named") {
  std::vector<GazetteerRow> rows{{"Paris", "", "France"}};
  std::vector<std::pair<std::string, std::string>> aliases{
      {"P-Town", "Paris"}, {"P-Town", "Portland"}};
  CHECK_THROWS_WITH_AS(Gazetteer::build(rows, aliases),
                       doctest::Contains("P-Town"), GazetteerError);
}

TEST_CASE("Cambridge, Massachusetts resolves to the state and country") {
  auto g = fixture_gazetteer();
  CHECK(resolved_to(parse_location("Cambridge, Massachusetts", g), "United States",
                    "Massachusetts"));
}

TEST_CASE("bare Cambridge stays ambiguous across four countries") {
  auto g = fixture_gazetteer();
  auto r = parse_location("Cambridge", g);
  const auto* ambiguous = std::get_if<Ambiguous>(&r);
  REQUIRE(ambiguous != nullptr);
  CHECK(ambiguous->countries.size() == 4);
}

TEST_CASE("misspelled state resolves through the fuzzy fallback") {
  auto g = fixture_gazetteer();
  CHECK(resolved_to(parse_location("Ilinois", g), "United States", "Illinois"));
}

TEST_CASE("empty and non-geographic descriptions are Unknown") {
  auto g = fixture_gazetteer();
  CHECK(std::holds_alternative<Unknown>(parse_location("", g)));
  CHECK(std::holds_alternative<Unknown>(parse_location("the moon, probably", g)));
  CHECK(std::holds_alternative<Unknown>(parse_location("   |  / ", g)));
}

TEST_CASE("aliases apply at the token level") {
  auto g = fixture_gazetteer();
  CHECK(resolved_to(parse_location("Cambridge, USA", g), "United States", "Massachusetts"));
  CHECK(resolved_to(parse_location("NYC", g), "United States", "New York"));
  CHECK(resolved_to(parse_location("Sydney / Oz", g), "Australia", "New South Wales"));
}

TEST_CASE("corroborating token resolves a multi-country name without a combination key") {
  auto g = fixture_gazetteer();
  // "cambridge, boston" is not an indexed combination, so the bare ambiguous
  // "cambridge" needs the second token to pick its country.
  auto r = parse_location("Cambridge, Boston", g);
  CHECK(resolved_to(r, "United States", "Massachusetts"));
}

TEST_CASE("longest combination wins over a bare city") {
  auto g = fixture_gazetteer();
  // "New York, United States" hits the city+country key, not the ambiguous bare token
  CHECK(resolved_to(parse_location("New York, USA", g), "United States", "New York"));
}

TEST_CASE("fuzzy fallback never overrides a recorded ambiguity") {
  auto g = fixture_gazetteer();
  // "Cambridge" is ambiguous; the typo'd state in the same description could
  // fuzzy-resolve, but phase 2 only runs when phase 1 is Unknown.
  auto r = parse_location("Cambridge", g);
  CHECK(std::holds_alternative<Ambiguous>(r));
}

TEST_CASE("determinism and corroboration monotonicity") {
  auto g = fixture_gazetteer();
  std::vector<std::string> descriptions{
      "Cambridge",      "Cambridge, Massachusetts", "London", "Sydney",
      "Paris, France",  "Toronto",                  "",       "Ilinois",
      "Karachi, Sindh", "somewhere over the rainbow"};
  for (const auto& d : descriptions) {
    auto a = parse_location(d, g);
    auto b = parse_location(d, g);
    CHECK(a == b);
  }

  // adding a corroborating token never turns Resolved into Ambiguous
  for (const auto& base : {"Cambridge, Massachusetts", "Toronto", "Mumbai"}) {
    auto before = parse_location(base, g);
    if (!std::holds_alternative<Resolved>(before)) continue;
    auto country = std::get<Resolved>(before).country;
    auto after = parse_location(std::string(base) + ", " + country, g);
    CHECK(std::holds_alternative<Resolved>(after));
    CHECK(std::get<Resolved>(after).country == country);
  }
}

TEST_CASE("every city,state combination round-trips to its own place") {
  auto table = kFixtures / "gazetteer.csv";
  auto g = Gazetteer::load_csv(table);
  std::ifstream in(table);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto first = line.find(',');
    auto second = line.find(',', first + 1);
    std::string city = line.substr(0, first);
    std::string state = line.substr(first + 1, second - first - 1);
    std::string country = line.substr(second + 1);
    if (state.empty()) continue;
    auto r = parse_location(city + ", " + state, g);
    INFO("combination: ", city, ", ", state);
    CHECK(resolved_to(r, country, state));
  }
}

TEST_CASE("a bare name indexed under two or more countries is never Resolved") {
  auto g = fixture_gazetteer();
  for (const auto& name : {"Cambridge"}) {
    auto r = parse_location(name, g);
    CHECK_FALSE(std::holds_alternative<Resolved>(r));
  }
}

TEST_CASE("memoized resolver returns identical outcomes") {
  auto g = fixture_gazetteer();
  LocationResolver resolver(g);
  auto a = resolver.resolve("Cambridge, Massachusetts");
  auto b = resolver.resolve("Cambridge, Massachusetts");
  CHECK(a == b);
  CHECK(resolver.cache_size() == 1);
}

TEST_CASE("corpus stats partition unique and user-weighted counts") {
  std::vector<ResolutionWithMultiplicity> rows{
      {Resolved{"United States", "Massachusetts"}, 3},
      {Resolved{"United Kingdom", ""}, 1},
      {Ambiguous{{"United States", "Canada"}}, 1},
      {Unknown{}, 1},
  };
  auto stats = corpus_stats(rows);
  CHECK(stats.resolved.unique == 2);
  CHECK(stats.resolved.weighted == 4);
  CHECK(stats.resolved_with_state.unique == 1);
  CHECK(stats.resolved_with_state.weighted == 3);
  CHECK(stats.ambiguous.unique == 1);
  CHECK(stats.ambiguous.weighted == 1);
  CHECK(stats.unknown.unique == 1);
  CHECK(stats.unknown.weighted == 1);
  CHECK(stats.resolved.unique + stats.ambiguous.unique + stats.unknown.unique == rows.size());
}

TEST_CASE("all-unknown input has zero resolved") {
  std::vector<ResolutionWithMultiplicity> rows{{Unknown{}, 5}, {Unknown{}, 2}};
  auto stats = corpus_stats(rows);
  CHECK(stats.resolved.unique == 0);
  CHECK(stats.unknown.unique == 2);
  CHECK(stats.unknown.weighted == 7);
}
