#pragma once

// Scenario files, trajectory serialization, run manifests and the combined
// Ricci-flow family of curve-flow runs.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "anholoflow/ricci_flow.hpp"
#include "anholoflow/soliton.hpp"
#include "anholoflow/verify.hpp"

namespace anholoflow {

using Json = nlohmann::ordered_json;

extern const char* const kToolVersion;

struct FixtureSpec {
  std::string name = "flat";
  int n = 2, m = 2;
  Params params;
};

struct RicciSpec {
  double chi_end = 0.1;
  double dchi = 0.05;
  std::vector<int> grid = {3, 1, 3, 1};
  double kappa = 0.0;
  LambdaMode lambda_mode = LambdaMode::Fixed;
  double lambda = 0.0;
  Representation representation = Representation::Modal;
  int every = 1;
};

struct SolitonSpec {
  Channel channel = Channel::H;
  int dim = 1;
  std::string flow = "k1";  // k0, k1, k2, sg
  int grid = 256;
  double length = 2.0 * M_PI;
  double tau_end = 1.0;
  double dtau = 0.0;  // 0: default step
  std::string init = "smooth-random";
  Params init_params;
  double curvature = 0.0;
  int every = 10;
};

struct OutputSpec {
  std::string jsonl, csv, manifest;
};

struct Scenario {
  std::string mode = "geometry";  // geometry, constframe, ricci, soliton, combined
  FixtureSpec fixture;
  RicciSpec ricci;
  SolitonSpec soliton;
  std::vector<double> point;  // empty: domain midpoint
  bool tm = false;
  int samples = 20;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  OutputSpec output;
};

// Parse errors carry origin:line:column; validation errors name the key.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::string& path);
Json scenario_to_json(const Scenario& sc);
void validate_scenario(const Scenario& sc);
// ANHOLOFLOW_SEED, when set, replaces the scenario seed.
void apply_seed_override(Scenario& sc);

LambdaMode parse_lambda_mode(const std::string& s);
std::string to_string(LambdaMode m);
Representation parse_representation(const std::string& s);
std::string to_string(Representation r);
std::vector<int> parse_grid(const std::string& s);
std::vector<double> parse_csv_numbers(const std::string& s);
// "name:key=v,key=v" or "name"
void parse_init(const std::string& s, std::string& name, Params& params);

DMetric fixture_dmetric(const FixtureSpec& f);
VecD fixture_point(const DMetric& dm, const std::vector<double>& point);

// Logical clock by default; wall-clock stamps only on request.
class RunClock {
 public:
  explicit RunClock(bool wallclock = false) : wall_(wallclock) {}
  std::string stamp();

 private:
  bool wall_;
  int tick_ = 0;
};

struct RunManifest {
  std::string tool = "anholoflow";
  std::string version = kToolVersion;
  std::string command;
  Json scenario;
  std::uint64_t seed = 1;
  std::string started, finished;
  std::vector<CriterionResult> groups;

  // Adds a check to the named group; names must be unique across the manifest.
  void add(const std::string& group, const CheckResult& c);
  void add(const CriterionResult& r);
  bool pass() const;
  Json to_json() const;
};

Json check_json(const CheckResult& c);

// Trajectory records, one JSON object per line after a header object.
Json output_header(const std::string& kind, std::uint64_t seed, const Json& scenario, const Json& meta = Json::object());
Json soliton_meta(const SolitonTrajectory& t);
std::vector<Json> ricci_records(const FlowTrajectory& t);
std::vector<Json> soliton_records(const SolitonTrajectory& t);
std::vector<Json> sg_records(const std::vector<SGState>& states);
SolitonTrajectory soliton_from_records(const Json& header, const std::vector<Json>& records);

void write_jsonl(const std::string& path, const Json& header, const std::vector<Json>& records);
// Returns header and records.
std::pair<Json, std::vector<Json>> read_jsonl(const std::string& path);
std::string jsonl_string(const Json& header, const std::vector<Json>& records);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

CsvTable ricci_csv(const FlowTrajectory& t);
CsvTable soliton_csv(const SolitonTrajectory& t);
CsvTable sg_csv(const std::vector<SGState>& states);
void write_csv(const std::string& path, const CsvTable& table);
std::string csv_string(const CsvTable& table);

struct SolitonRun {
  bool sg = false;
  SolitonTrajectory traj;
  std::vector<SGState> states;
};

SolitonRun run_soliton(const SolitonSpec& spec, std::uint64_t seed);
std::vector<CheckResult> soliton_checks(const SolitonRun& run, const std::string& prefix = "");
std::vector<Json> soliton_run_records(const SolitonRun& run);
CsvTable soliton_run_csv(const SolitonRun& run);

FlowTrajectory run_ricci(const Scenario& sc);
std::vector<CheckResult> ricci_checks(const FlowTrajectory& t, double tol);

struct CombinedResult {
  FlowTrajectory ricci;
  std::vector<double> curvatures;  // frozen h or v scalar per snapshot
  std::vector<SolitonRun> runs;
  RunManifest manifest;
};

// One curve-flow run per Ricci snapshot with the snapshot's scalar curvature
// frozen. Sub-run errors are rethrown with the snapshot index.
CombinedResult combined_run(const Scenario& sc, RunClock& clock);

RunManifest verify_manifest(std::uint64_t seed, const std::vector<int>& ids, RunClock& clock);

}  // namespace anholoflow
