#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "srcsel/cli.hpp"
#include "srcsel/error.hpp"
#include "srcsel/report.hpp"
#include "support.hpp"

using namespace srcsel;
using testing::TempDir;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string two_source() { return testing::scenario_path("two_source.cfg").string(); }

/// Generates the two-source scenario into `dir/data`.
void generate(const TempDir& dir) {
  const auto r = cli({"gen", "--scenario", two_source(), "--out", (dir / "data").string()});
  REQUIRE(r.code == kExitOk);
}

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(testing::read_file(p)); }

class EnvSeed {
 public:
  explicit EnvSeed(const char* value) { ::setenv(kSeedEnvVar, value, 1); }
  ~EnvSeed() { ::unsetenv(kSeedEnvVar); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("seed precedence") {
  ::unsetenv(kSeedEnvVar);
  CHECK(resolve_seed(std::nullopt, std::nullopt) == 42);
  CHECK(resolve_seed(std::nullopt, 9) == 9);
  CHECK(resolve_seed(5, 9) == 5);
  {
    EnvSeed env("77");
    CHECK(resolve_seed(std::nullopt, 9) == 77);
    CHECK(resolve_seed(5, 9) == 5);
  }
  {
    EnvSeed env("seven");
    CHECK_THROWS_AS(resolve_seed(std::nullopt, std::nullopt), Error);
  }
}

TEST_CASE("gen writes one csv per source and a manifest") {
  TempDir dir("cli_gen");
  generate(dir);
  for (const char* id : {"S1", "S2", "test"}) CHECK(std::filesystem::exists(dir / "data" / (std::string(id) + ".csv")));
  const auto manifest = read_json(dir / "data" / "manifest.json");
  CHECK(manifest["command"] == "gen");
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["artifact"] == kArtifactName);
  CHECK(manifest["outputs"] == nlohmann::json::array({"S1.csv", "S2.csv", "test.csv"}));
  const auto sources = load_source_dir(dir / "data", SchemaConfig{});
  REQUIRE(sources.size() == 3);
  CHECK(sources[0].id() == "S1");
  CHECK(sources[0].rows() == 1000);
}

TEST_CASE("the environment seed reaches the generator and the flag beats it") {
  TempDir dir("cli_env");
  {
    EnvSeed env("9");
    REQUIRE(cli({"gen", "--scenario", two_source(), "--out", (dir / "env").string()}).code == kExitOk);
    REQUIRE(cli({"gen", "--scenario", two_source(), "--out", (dir / "flag").string(), "--seed", "42"}).code ==
            kExitOk);
  }
  CHECK(read_json(dir / "env" / "manifest.json")["seed"] == 9);
  CHECK(read_json(dir / "flag" / "manifest.json")["seed"] == 42);
  CHECK(testing::read_file(dir / "env" / "S1.csv") != testing::read_file(dir / "flag" / "S1.csv"));
}

TEST_CASE("distance writes a square matrix") {
  TempDir dir("cli_dist");
  generate(dir);
  const auto r = cli({"distance", "--data", (dir / "data").string(), "--out", (dir / "dist").string(), "--metric",
                      "score_x"});
  REQUIRE(r.code == kExitOk);
  const auto csv = testing::read_file(dir / "dist" / "distances.csv");
  CHECK(csv.rfind("p\\q,S1,S2,test\n", 0) == 0);
  CHECK(csv.find("\nS1,,") != std::string::npos);  // empty diagonal
  const auto est = read_json(dir / "dist" / "estimates.json");
  CHECK(est.size() == 6);
  CHECK(est[0]["kind"] == "score_x");
}

TEST_CASE("simulate writes a trajectory table") {
  TempDir dir("cli_sim");
  const auto r = cli({"simulate", "--scenario", two_source(), "--out", (dir / "sim").string(), "--order", "S1,S2",
                      "--grid", "500,1000,1500", "--replicates", "2", "--folds", "2", "--repeats", "1"});
  REQUIRE(r.code == kExitOk);
  const auto csv = testing::read_file(dir / "sim" / "trajectory.csv");
  CHECK(csv.rfind("n,metric,mean,stderr\n", 0) == 0);
  CHECK(csv.find("divergence:kl_ratio_x") != std::string::npos);
  CHECK(csv.find(",auc,") != std::string::npos);
  CHECK(read_json(dir / "sim" / "manifest.json")["command"] == "simulate");
}

TEST_CASE("recommend ranks candidates and optionally compares strategies") {
  TempDir dir("cli_rec");
  generate(dir);
  const auto r = cli({"recommend", "--data", (dir / "data").string(), "--reference", "test", "--k", "1", "--out",
                      (dir / "rec").string(), "--compare", "--folds", "2", "--repeats", "1"});
  REQUIRE(r.code == kExitOk);
  const auto ranking = read_json(dir / "rec" / "ranking.json");
  CHECK(ranking["recommended"] == nlohmann::json::array({"S1"}));
  CHECK(std::filesystem::exists(dir / "rec" / "strategies.csv"));
  CHECK(read_json(dir / "rec" / "strategies.json").size() == 4);
  const auto manifest = read_json(dir / "rec" / "manifest.json");
  CHECK(manifest["outputs"] == nlohmann::json::array({"ranking.json", "strategies.csv", "strategies.json"}));
}

TEST_CASE("report evaluates a reference plus additions") {
  TempDir dir("cli_rep");
  generate(dir);
  const auto r = cli({"report", "--data", (dir / "data").string(), "--reference", "S1", "--add", "S2", "--test",
                      "test", "--out", (dir / "rep").string(), "--folds", "2", "--repeats", "2", "--format", "csv"});
  REQUIRE(r.code == kExitOk);
  CHECK(std::filesystem::exists(dir / "rep" / "summary.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "rep" / "result.json"));
  const auto csv = testing::read_file(dir / "rep" / "summary.csv");
  CHECK(csv.find("auc") != std::string::npos);
}

TEST_CASE("usage errors exit 1 with the usage text") {
  const auto unknown = cli({"recommend", "--bogus"});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"distance", "--data", "x", "--out", "y", "--metric", "cosine"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("data errors exit 2") {
  TempDir dir("cli_err");
  generate(dir);
  const auto missing_ref = cli({"recommend", "--data", (dir / "data").string(), "--reference", "NOPE", "--out",
                                (dir / "rec").string()});
  CHECK(missing_ref.code == kExitDataError);
  CHECK(missing_ref.err.rfind("error:", 0) == 0);
  CHECK(cli({"distance", "--data", (dir / "nowhere").string(), "--out", (dir / "d").string()}).code ==
        kExitDataError);
  std::filesystem::create_directories(dir / "bad");
  testing::write_file(dir / "bad" / "a.csv", "x1,label\n1.0,maybe\n");
  CHECK(cli({"distance", "--data", (dir / "bad").string(), "--out", (dir / "d").string()}).code == kExitDataError);
}

TEST_CASE("plot tables") {
  TempDir dir("plots");
  CHECK_THROWS_AS(emit_plot_tables(std::span<const PlotTable>{}, dir.path()), Error);

  PlotTable t{"demo", "n", "metric", {{"100", "auc", 0.75, 0.01}, {"200", "auc", std::nan(""), 0.0}}};
  CHECK(to_csv(t) == "n,metric,mean,stderr\n100,auc,0.75,0.01\n200,auc,nan,0\n");
  const PlotTable tables[] = {t};
  const auto paths = emit_plot_tables(tables, dir / "out");
  REQUIRE(paths.size() == 1);
  CHECK(testing::read_file(paths[0]) == to_csv(t));
  CHECK(to_csv(t) == to_csv(t));

  const std::vector<double> one = {0.8};
  CHECK(summarize_replicates("x", "s", one).std_error == 0.0);
  const std::vector<double> three = {0.7, 0.8, 0.9};
  const auto row = summarize_replicates("x", "s", three);
  CHECK(row.mean == doctest::Approx(0.8));
  CHECK(row.std_error == doctest::Approx(testing::stderr_of(three)));

  PlotTable unnamed;
  unnamed.rows.push_back({"a", "b", 1.0, 0.0});
  const PlotTable bad[] = {unnamed};
  CHECK_THROWS_AS(emit_plot_tables(bad, dir / "out"), Error);
}

TEST_CASE("manifests are deterministic and sorted") {
  TempDir dir("manifest");
  const nlohmann::json cfg = {{"b", 1}, {"a", "x"}};
  write_manifest(dir / "one", "demo", 3, cfg, {"z.csv", "a.json"});
  write_manifest(dir / "two", "demo", 3, cfg, {"a.json", "z.csv"});
  const auto a = testing::read_file(dir / "one" / "manifest.json");
  CHECK(a == testing::read_file(dir / "two" / "manifest.json"));
  const auto j = nlohmann::json::parse(a);
  CHECK(j["outputs"] == nlohmann::json::array({"a.json", "z.csv"}));
  CHECK(j["version"] == kArtifactVersion);
}

}  // TEST_SUITE
