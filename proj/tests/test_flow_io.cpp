#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "anholoflow/errors.hpp"
#include "anholoflow/flow_io.hpp"

using namespace anholoflow;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("anholoflow_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text, "case.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool same(const MatD& a, const MatD& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

Scenario small_combined(const std::string& fixture, double chi_end) {
  Scenario sc;
  sc.mode = "combined";
  sc.fixture.name = fixture;
  sc.ricci.chi_end = chi_end;
  sc.ricci.dchi = 0.05;
  sc.soliton.grid = 64;
  sc.soliton.tau_end = 0.05;
  sc.soliton.every = 5;
  return sc;
}

}  // namespace

TEST_CASE("minimal scenario loads with defaults") {
  Scenario sc = parse_scenario(R"({"fixture": {"name": "flat"}})");
  CHECK(sc.mode == "geometry");
  CHECK(sc.fixture.n == 2);
  CHECK(sc.fixture.m == 2);
  CHECK(sc.tol == 1e-8);
  CHECK(sc.seed == 1);
  CHECK(sc.soliton.flow == "k1");
  CHECK(sc.ricci.grid == std::vector<int>{3, 1, 3, 1});
}

TEST_CASE("validation errors name the key") {
  CHECK(error_of(R"({"tol": -1e-3})").find("'tol'") != std::string::npos);
  CHECK(error_of(R"({"fixture": {"name": "nowhere"}})").find("'fixture.name'") != std::string::npos);
  CHECK(error_of(R"({"soliton": {"grid": 15}})").find("'soliton.grid'") != std::string::npos);
  CHECK(error_of(R"({"ricci": {"grid": [3, 3]}})").find("'ricci.grid'") != std::string::npos);
  CHECK(error_of(R"({"samples": "many"})").find("'samples'") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their full path") {
  CHECK(error_of(R"({"tolerance": 1})").find("unknown key 'tolerance'") != std::string::npos);
  CHECK(error_of(R"({"soliton": {"init": {"nam": "sine"}}})").find("unknown key 'soliton.init.nam'") !=
        std::string::npos);
}

TEST_CASE("parse errors carry line and column") {
  const std::string e = error_of("{\n  \"tol\": 1e-8,\n  \"seed\": ]\n}");
  CHECK(e.rfind("case.json:3:11:", 0) == 0);
}

TEST_CASE("missing scenario file is an I/O error with the path") {
  try {
    load_scenario("/nonexistent/dir/scenario.json");
    FAIL("no error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/scenario.json") != std::string::npos);
  }
}

TEST_CASE("combined scenario round-trips through JSON") {
  const std::string text = R"({
    "mode": "combined",
    "fixture": {"name": "product-sphere", "n": 2, "m": 2, "params": {}},
    "ricci": {"chi_end": 0.1, "dchi": 0.05, "grid": [3, 1, 3, 1], "lambda_mode": "normalized", "kappa": 0.5},
    "soliton": {"channel": "v", "dim": 3, "flow": "k2", "grid": 64, "tau_end": 0.01,
                "init": {"name": "sech", "params": {"amp": 0.4}}},
    "seed": 42
  })";
  Scenario sc = parse_scenario(text);
  CHECK(sc.mode == "combined");
  CHECK(sc.ricci.lambda_mode == LambdaMode::Normalized);
  CHECK(sc.soliton.channel == Channel::V);
  CHECK(sc.soliton.init_params.at("amp") == 0.4);
  const Json j = scenario_to_json(sc);
  CHECK(j.contains("ricci"));
  CHECK(j.contains("soliton"));
  Scenario back = parse_scenario(j.dump());
  CHECK(scenario_to_json(back).dump() == j.dump());
}

TEST_CASE("seed override from the environment") {
  Scenario sc;
  setenv("ANHOLOFLOW_SEED", "99", 1);
  apply_seed_override(sc);
  CHECK(sc.seed == 99);
  setenv("ANHOLOFLOW_SEED", "x9", 1);
  CHECK_THROWS_AS(apply_seed_override(sc), ConfigError);
  unsetenv("ANHOLOFLOW_SEED");
}

TEST_CASE("init and grid strings") {
  std::string name;
  Params p;
  parse_init("sech:amp=0.3,width=2", name, p);
  CHECK(name == "sech");
  CHECK(p.at("amp") == 0.3);
  CHECK(p.at("width") == 2.0);
  CHECK(parse_grid("5,1,5,1") == std::vector<int>{5, 1, 5, 1});
  CHECK_THROWS_AS(parse_grid("5,x"), ConfigError);
  CHECK_THROWS_AS(parse_init("sech:amp", name, p), ConfigError);
}

TEST_CASE("empty trajectory exports a header-only file") {
  SolitonTrajectory t;
  t.grid = PeriodicGrid{64, 2.0 * M_PI};
  const std::string jl = temp_path("empty.jsonl"), csv = temp_path("empty.csv");
  write_jsonl(jl, output_header("soliton", 3, nullptr, soliton_meta(t)), soliton_records(t));
  write_csv(csv, soliton_csv(t));
  auto [header, records] = read_jsonl(jl);
  CHECK(header["seed"] == 3);
  CHECK(records.empty());
  CHECK(slurp(csv) == "tau,H0,H1,H2\n");
}

TEST_CASE("one-snapshot trajectory exports one row and re-parses") {
  SolitonSpec spec;
  spec.grid = 64;
  spec.tau_end = 0.0;
  SolitonRun run = run_soliton(spec, 4);
  REQUIRE(run.traj.snaps.size() == 1);
  const std::string jl = temp_path("one.jsonl");
  write_jsonl(jl, output_header("soliton", 4, nullptr, soliton_meta(run.traj)), soliton_records(run.traj));
  const std::string csv = csv_string(soliton_csv(run.traj));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  auto [header, records] = read_jsonl(jl);
  SolitonTrajectory back = soliton_from_records(header, records);
  REQUIRE(back.snaps.size() == 1);
  CHECK(same(back.snaps[0].v, run.traj.snaps[0].v));
}

TEST_CASE("100-snapshot export, import and re-export are byte-identical") {
  SolitonSpec spec;
  spec.grid = 64;
  spec.dim = 2;
  spec.tau_end = 0.99;
  spec.dtau = 0.01;
  spec.every = 1;
  SolitonRun run = run_soliton(spec, 8);
  REQUIRE(run.traj.snaps.size() == 100);
  const Json header = output_header("soliton", 8, nullptr, soliton_meta(run.traj));
  const std::string a = temp_path("a.jsonl"), b = temp_path("b.jsonl");
  write_jsonl(a, header, soliton_records(run.traj));
  auto [h, records] = read_jsonl(a);
  SolitonTrajectory back = soliton_from_records(h, records);
  write_jsonl(b, output_header("soliton", 8, nullptr, soliton_meta(back)), soliton_records(back));
  CHECK(slurp(a) == slurp(b));
  CHECK(csv_string(soliton_csv(run.traj)) == csv_string(soliton_csv(back)));
}

TEST_CASE("export is deterministic for a fixed seed") {
  SolitonSpec spec;
  spec.grid = 64;
  spec.tau_end = 0.1;
  CHECK(jsonl_string(Json::object(), soliton_run_records(run_soliton(spec, 5))) ==
        jsonl_string(Json::object(), soliton_run_records(run_soliton(spec, 5))));
  CHECK(jsonl_string(Json::object(), soliton_run_records(run_soliton(spec, 5))) !=
        jsonl_string(Json::object(), soliton_run_records(run_soliton(spec, 6))));
}

TEST_CASE("unwritable export path is an I/O error") {
  CHECK_THROWS_AS(write_csv("/nonexistent/dir/out.csv", CsvTable{{"a"}, {}}), IoError);
}

TEST_CASE("manifest rejects duplicate checks") {
  RunManifest m;
  m.add("g", CheckResult{"c", 0.0, 1.0, true, ""});
  CHECK_THROWS(m.add("g", CheckResult{"c", 0.0, 1.0, true, ""}));
  m.add("h", CheckResult{"c", 2.0, 1.0, false, ""});
  CHECK_FALSE(m.pass());
  CHECK(m.to_json()["groups"].size() == 2);
}

TEST_CASE("logical clock is deterministic") {
  RunClock a, b;
  CHECK(a.stamp() == "logical:1");
  CHECK(a.stamp() == "logical:2");
  CHECK(b.stamp() == "logical:1");
}

TEST_CASE("single-snapshot combined run equals the standalone run") {
  Scenario sc = small_combined("sphere", 0.0);
  RunClock clock;
  CombinedResult res = combined_run(sc, clock);
  REQUIRE(res.runs.size() == 1);
  SolitonSpec spec = sc.soliton;
  spec.curvature = res.ricci.snaps[0].R_mean;
  CHECK(spec.curvature == doctest::Approx(2.0).epsilon(1e-12));
  SolitonRun alone = run_soliton(spec, sc.seed);
  REQUIRE(alone.traj.snaps.size() == res.runs[0].traj.snaps.size());
  for (std::size_t i = 0; i < alone.traj.snaps.size(); ++i)
    CHECK(same(alone.traj.snaps[i].v, res.runs[0].traj.snaps[i].v));
  CHECK(res.manifest.pass());
}

TEST_CASE("flat Ricci flow gives identical soliton sub-runs") {
  Scenario sc = small_combined("flat", 0.1);
  RunClock clock;
  CombinedResult res = combined_run(sc, clock);
  REQUIRE(res.runs.size() == 3);
  for (std::size_t k = 1; k < res.runs.size(); ++k) {
    CHECK(res.curvatures[k] == 0.0);
    CHECK(same(res.runs[k].traj.snaps.back().v, res.runs[0].traj.snaps.back().v));
  }
}

TEST_CASE("Einstein schedule: snapshot curvature matches (n - 1) lambda_hat") {
  Scenario sc = small_combined("product-sphere", 0.1);
  sc.soliton.channel = Channel::V;
  RunClock clock;
  CombinedResult res = combined_run(sc, clock);
  REQUIRE(res.ricci.snaps.size() == 3);
  // Unnormalized flow: the product sphere shrinks, so the curvature grows with chi.
  CHECK(res.curvatures[2] > res.curvatures[0]);
  for (int i = 0; i < 3; ++i) {
    const auto& group = res.manifest.groups[i + 1];
    CHECK(group.title == "snapshot " + std::to_string(i));
    auto it = std::find_if(group.checks.begin(), group.checks.end(),
                           [](const CheckResult& c) { return c.name == "R-vs-lambda-hat"; });
    REQUIRE(it != group.checks.end());
    CHECK(it->pass);
  }
  CHECK(res.manifest.pass());
}

TEST_CASE("combined sub-run errors carry the snapshot index") {
  Scenario sc = small_combined("flat", 0.05);
  sc.soliton.flow = "sg";
  sc.soliton.init = "sine";
  sc.soliton.init_params = {{"amp", 1.5}};
  RunClock clock;
  try {
    combined_run(sc, clock);
    FAIL("no error");
  } catch (const HyperbolicityError& e) {
    CHECK(std::string(e.what()).rfind("snapshot 0: ", 0) == 0);
  }
}
