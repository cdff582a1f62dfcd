#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "mediaflow/media_registry.hpp"
#include "mediaflow/url.hpp"

using namespace mediaflow;

namespace {
const std::filesystem::path kFixtures = MEDIAFLOW_FIXTURE_DIR;
}

TEST_CASE("factuality bands cover the 0-10 score") {
  CHECK(factuality_category(0) == Factuality::very_high);
  CHECK(factuality_category(1) == Factuality::high);
  CHECK(factuality_category(2) == Factuality::high);
  CHECK(factuality_category(3) == Factuality::mostly_factual);
  CHECK(factuality_category(4) == Factuality::mostly_factual);
  CHECK(factuality_category(5) == Factuality::mixed);
  CHECK(factuality_category(6) == Factuality::mixed);
  CHECK(factuality_category(7) == Factuality::low);
  CHECK(factuality_category(9) == Factuality::low);
  CHECK(factuality_category(10) == Factuality::very_low);
  CHECK_THROWS_AS(factuality_category(-1), RegistryError);
  CHECK_THROWS_AS(factuality_category(11), RegistryError);
}

TEST_CASE("factuality category is monotone in the score") {
  for (int a = 0; a < 10; ++a) {
    CHECK(static_cast<int>(factuality_category(a)) <=
          static_cast<int>(factuality_category(a + 1)));
  }
}

namespace {
MediaOutlet make_outlet(std::optional<int> score, std::optional<Traffic> traffic,
                        Ideology ideology = Ideology::center,
                        std::optional<int> failed = {}, std::optional<bool> questionable = {}) {
  MediaOutlet o;
  o.id = "o";
  o.factuality_score = score;
  o.traffic = traffic;
  o.ideology = ideology;
  o.failed_fact_checks = failed;
  o.questionable = questionable;
  return o;
}
}  // namespace

TEST_CASE("credibility rules") {
  // high/very-high factuality is high regardless of traffic
  CHECK(classify_credibility(make_outlet(0, {})) == Credibility::high);
  CHECK(classify_credibility(make_outlet(2, Traffic::low)) == Credibility::high);
  // mostly factual
  CHECK(classify_credibility(make_outlet(4, Traffic::high)) == Credibility::high);
  CHECK(classify_credibility(make_outlet(4, Traffic::medium)) == Credibility::high);
  CHECK(classify_credibility(make_outlet(4, Traffic::low, Ideology::left)) ==
        Credibility::mixed);
  CHECK(classify_credibility(make_outlet(4, Traffic::low, Ideology::center_right)) ==
        Credibility::mixed);
  // mixed factuality
  CHECK(classify_credibility(make_outlet(6, Traffic::high)) == Credibility::mixed);
  CHECK(classify_credibility(make_outlet(6, Traffic::low, Ideology::center, 2)) ==
        Credibility::mixed);
  CHECK(classify_credibility(make_outlet(6, Traffic::low, Ideology::center, 5)) ==
        Credibility::low);
  // low factuality
  CHECK(classify_credibility(make_outlet(8, Traffic::high)) == Credibility::low);
  CHECK(classify_credibility(make_outlet(10, {})) == Credibility::low);
  // questionable wins over everything else
  CHECK(classify_credibility(make_outlet(0, Traffic::high, Ideology::center, {}, true)) ==
        Credibility::low);
  // missing deciding fields
  CHECK(classify_credibility(make_outlet({}, {})) == Credibility::undetermined);
  CHECK(classify_credibility(make_outlet(4, {})) == Credibility::undetermined);
  CHECK(classify_credibility(make_outlet(6, Traffic::low)) == Credibility::undetermined);
}

TEST_CASE("registry loads the fixture and resolves handles case-insensitively") {
  auto registry = MediaRegistry::load_json(kFixtures / "registry.json");
  CHECK(registry.outlets().size() == 10);
  const MediaOutlet* cnn = registry.outlet_for_handle("cnn");
  REQUIRE(cnn != nullptr);
  CHECK(cnn->id == "cnn");
  CHECK(registry.outlet_for_handle("CNNBRK") == cnn);
  CHECK(registry.outlet_for_handle("nobody") == nullptr);
  CHECK(registry.outlet_for_url("https://edition.cnn.com/x") == cnn);
  // derived factuality from score
  REQUIRE(cnn->factuality.has_value());
  CHECK(*cnn->factuality == Factuality::mixed);
}

TEST_CASE("duplicate handle across outlets fails the load naming both") {
  std::vector<MediaOutlet> outlets(2);
  outlets[0].id = "a";
  outlets[0].canonical_url = "https://a.example/";
  outlets[0].handles = {"shared"};
  outlets[1].id = "b";
  outlets[1].canonical_url = "https://b.example/";
  outlets[1].handles = {"SHARED"};
  CHECK_THROWS_WITH_AS(MediaRegistry::from_outlets(std::move(outlets)),
                       doctest::Contains("claimed by outlets 'a' and 'b'"), RegistryError);
}

TEST_CASE("handle map is total over registered handles") {
  auto registry = MediaRegistry::load_json(kFixtures / "registry.json");
  auto map = registry.handle_to_outlet();
  std::size_t handle_count = 0;
  for (const auto& outlet : registry.outlets()) handle_count += outlet.handles.size();
  CHECK(map.size() == handle_count);
  CHECK(map.at("cnn") == "cnn");
  CHECK(map.at("cnnbrk") == "cnn");
  CHECK(map.at("bbcworld") == "bbc");
}

TEST_CASE("ideology folds 7-way onto 3-way symmetrically") {
  CHECK(ideology_group(Ideology::extreme_left) == IdeologyGroup::left);
  CHECK(ideology_group(Ideology::left) == IdeologyGroup::left);
  CHECK(ideology_group(Ideology::center_left) == IdeologyGroup::left);
  CHECK(ideology_group(Ideology::center) == IdeologyGroup::center);
  CHECK(ideology_group(Ideology::center_right) == IdeologyGroup::right);
  CHECK(ideology_group(Ideology::right) == IdeologyGroup::right);
  CHECK(ideology_group(Ideology::extreme_right) == IdeologyGroup::right);
}

TEST_CASE("resolve_handles matches three CNN candidates inside the top 10") {
  auto fixture = HandleResolutionFixture::load(kFixtures / "handle_search.json");
  MediaOutlet cnn;
  cnn.id = "cnn";
  cnn.name = "CNN";
  cnn.canonical_url = "https://www.cnn.com/";

  auto result = resolve_handles(cnn, fixture);
  CHECK(result.handles == std::vector<std::string>{"CNN", "CNNEE", "cnnbrk"});
  CHECK(result.warnings.empty());

  // brute force over every candidate, an independent check of the top-10 cut
  std::size_t all_matching = 0;
  for (const auto& candidate : fixture.searches.at("CNN")) {
    for (const auto& u : candidate.urls) {
      auto final_url = resolve_redirects(u, fixture.redirects);
      if (url::registrable_domain(final_url) == "cnn.com") {
        ++all_matching;
        break;
      }
    }
  }
  CHECK(all_matching == 5);  // two of them sit beyond the top 10
}

TEST_CASE("candidate order does not matter below the truncation point") {
  auto fixture = HandleResolutionFixture::load(kFixtures / "handle_search.json");
  MediaOutlet cnn;
  cnn.id = "cnn";
  cnn.name = "CNN";
  cnn.canonical_url = "https://www.cnn.com/";

  auto& candidates = fixture.searches.at("CNN");
  std::reverse(candidates.begin(), candidates.begin() + 10);
  auto reversed = resolve_handles(cnn, fixture);
  CHECK(reversed.handles == std::vector<std::string>{"CNN", "CNNEE", "cnnbrk"});
}

TEST_CASE("identity redirect match and missing query behave as specified") {
  HandleResolutionFixture fixture;
  fixture.searches["Daily Desk"] = {{"dailydesk", {"https://dailydesk.example/"}}};
  MediaOutlet outlet;
  outlet.id = "daily-desk";
  outlet.name = "Daily Desk";
  outlet.canonical_url = "https://dailydesk.example/";
  auto direct = resolve_handles(outlet, fixture);
  CHECK(direct.handles == std::vector<std::string>{"dailydesk"});

  MediaOutlet missing;
  missing.id = "ghost";
  missing.name = "Ghost Gazette";
  missing.canonical_url = "https://ghost.example/";
  auto none = resolve_handles(missing, fixture);
  CHECK(none.handles.empty());
  REQUIRE(none.warnings.size() == 1);
  CHECK(none.warnings[0].find("Ghost Gazette") != std::string::npos);
}

TEST_CASE("redirect cycles raise an error naming the URL") {
  auto fixture = HandleResolutionFixture::load(kFixtures / "handle_search.json");
  MediaOutlet cyc;
  cyc.id = "cycle-news";
  cyc.name = "Cycle News";
  cyc.canonical_url = "https://cycle.example/";
  CHECK_THROWS_WITH_AS(resolve_handles(cyc, fixture), doctest::Contains("loop.example"),
                       RegistryError);
}

TEST_CASE("desk registry of 20 outlets and 31 handles maps all 31") {
  std::vector<MediaOutlet> outlets;
  int handle_serial = 0;
  for (int i = 0; i < 20; ++i) {
    MediaOutlet o;
    o.id = "outlet-" + std::to_string(i);
    o.canonical_url = "https://outlet" + std::to_string(i) + ".example/";
    o.handles.push_back("h" + std::to_string(handle_serial++));
    if (i < 11) o.handles.push_back("h" + std::to_string(handle_serial++));
    outlets.push_back(std::move(o));
  }
  REQUIRE(handle_serial == 31);
  auto registry = MediaRegistry::from_outlets(std::move(outlets));
  CHECK(registry.handle_to_outlet().size() == 31);
}

TEST_CASE("registry JSON round-trips") {
  auto registry = MediaRegistry::load_json(kFixtures / "registry.json");
  auto tmp = std::filesystem::temp_directory_path() / "mediaflow_registry_rt.json";
  {
    std::ofstream out(tmp);
    out << registry.to_json();
  }
  auto again = MediaRegistry::load_json(tmp);
  CHECK(again.outlets().size() == registry.outlets().size());
  CHECK(again.to_json() == registry.to_json());
  std::filesystem::remove(tmp);
}
