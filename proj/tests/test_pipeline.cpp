#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "mediaflow/pipeline.hpp"

using namespace mediaflow;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = MEDIAFLOW_FIXTURE_DIR;
const std::string kCli = MEDIAFLOW_CLI_PATH;

int run_cli(const std::string& args) {
  return std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
}

struct TempRun {
  fs::path dir;
  TempRun() : dir(fs::temp_directory_path() / ("mediaflow_pipe_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempRun() { fs::remove_all(dir); }
  std::string sub(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("sha256 and atomic_write behave") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  TempRun run;
  fs::path target = run.dir / "x.txt";
  atomic_write(target, "payload");
  CHECK(read_file(target) == "payload");
  CHECK_FALSE(fs::exists(run.dir / "x.txt.tmp"));
  CHECK(sha256_file(target) == sha256_hex("payload"));
}

TEST_CASE("manifest JSON round-trips inputs and outputs") {
  TempRun run;
  fs::path input = run.dir / "in.bin";
  atomic_write(input, "input-bytes");
  RunManifest manifest("demo");
  manifest.set_parameter("alpha", std::int64_t{3});
  manifest.add_input(input);
  fs::path output = run.dir / "out.bin";
  atomic_write(output, "output-bytes");
  manifest.add_output(output);
  manifest.set_timing(12.5, 100);
  fs::path path = run.dir / "manifest.json";
  manifest.write(path);

  auto loaded = RunManifest::load(path);
  CHECK(loaded.inputs().at("in.bin") == sha256_hex("input-bytes"));
  CHECK(loaded.outputs().at("out.bin") == sha256_hex("output-bytes"));
}

TEST_CASE("golden pipeline: ingest -> geoparse -> matrix reproduces the golden triplets") {
  TempRun run;
  REQUIRE(run_cli("ingest --input " + (kFixtures / "tweets12.ndjson").string() + " --out " +
                  run.sub("ingest")) == 0);
  REQUIRE(run_cli("geoparse --records " + run.sub("ingest") + "/records.ndjson --gazetteer " +
                  (kFixtures / "gazetteer.csv").string() + " --aliases " +
                  (kFixtures / "aliases.csv").string() + " --out " + run.sub("geo")) == 0);
  REQUIRE(run_cli("matrix --records " + run.sub("ingest") +
                  "/records.ndjson --registry " + (kFixtures / "registry.json").string() +
                  " --locations " + run.sub("geo") + "/locations.csv" +
                  " --rows country --cols outlet --scheme 3 --out " + run.sub("matrix")) == 0);

  CHECK(read_file(run.sub("matrix") + "/matrix.csv") ==
        read_file(kFixtures / "golden_country_matrix.csv"));

  SUBCASE("manifests chain by content hash") {
    auto ingest = RunManifest::load(run.sub("ingest") + "/manifest.json");
    auto geo = RunManifest::load(run.sub("geo") + "/manifest.json");
    auto matrix = RunManifest::load(run.sub("matrix") + "/manifest.json");
    CHECK(geo.inputs().at("records.ndjson") == ingest.outputs().at("records.ndjson"));
    CHECK(matrix.inputs().at("records.ndjson") == ingest.outputs().at("records.ndjson"));
    CHECK(matrix.inputs().at("locations.csv") == geo.outputs().at("locations.csv"));
  }

  SUBCASE("re-running a stage yields byte-identical primary outputs") {
    REQUIRE(run_cli("matrix --records " + run.sub("ingest") +
                    "/records.ndjson --registry " + (kFixtures / "registry.json").string() +
                    " --locations " + run.sub("geo") + "/locations.csv" +
                    " --rows country --cols outlet --scheme 3 --out " +
                    run.sub("matrix_again")) == 0);
    CHECK(read_file(run.sub("matrix") + "/matrix.csv") ==
          read_file(run.sub("matrix_again") + "/matrix.csv"));
    CHECK(read_file(run.sub("matrix") + "/matrix.meta.json") ==
          read_file(run.sub("matrix_again") + "/matrix.meta.json"));
  }

  SUBCASE("report chains the stage manifests into a DAG") {
    REQUIRE(run_cli("report --run " + run.sub("ingest") + " --run " + run.sub("geo") +
                    " --run " + run.sub("matrix") + " --out " + run.sub("report")) == 0);
    json report = json::parse(read_file(run.sub("report") + "/report.json"));
    CHECK(report["stages"].size() == 3);
    // geoparse and matrix both consume the ingest records
    int chained = 0;
    for (const auto& stage : report["stages"]) {
      chained += static_cast<int>(stage["chained_inputs"].size());
    }
    CHECK(chained >= 2);
  }
}

TEST_CASE("report with no runs writes an empty report and exits zero") {
  TempRun run;
  CHECK(run_cli("report --out " + run.sub("report")) == 0);
  json report = json::parse(read_file(run.sub("report") + "/report.json"));
  CHECK(report["stages"].empty());
}

TEST_CASE("missing inputs exit nonzero without leaving partial outputs") {
  TempRun run;
  CHECK(run_cli("ingest --input /nonexistent/stream.ndjson --out " + run.sub("bad")) != 0);
  CHECK_FALSE(fs::exists(run.sub("bad") + "/records.ndjson"));
  CHECK_FALSE(fs::exists(run.sub("bad") + "/manifest.json"));
}

TEST_CASE("config file supplies defaults that flags override") {
  TempRun run;
  fs::path config = run.dir / "pipeline.toml";
  {
    std::ofstream out(config);
    out << "[ingest]\n";
    out << "input = \"" << (kFixtures / "tweets12.ndjson").string() << "\"\n";
    out << "out = \"" << run.sub("from_config") << "\"\n";
    out << "workers = 2\n";
  }
  CHECK(run_cli("--config " + config.string() + " ingest") == 0);
  CHECK(fs::exists(run.sub("from_config") + "/records.ndjson"));
}
