// anholoflow {nconn|geometry|constframe|ricci|soliton|combined|verify} [flags]
// Exit codes: 0 pass, 1 invariant failure, 2 usage or config error, 3 blow-up.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "anholoflow/constant_frame.hpp"
#include "anholoflow/errors.hpp"
#include "anholoflow/flow_io.hpp"

using namespace anholoflow;

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2, kBlowUp = 3;

Json matrix_json(const MatD& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Json tensor_json(const Tensor3<double>& t) {
  Json out = Json::array();
  for (int i = 0; i < t.d0; ++i) {
    Json a = Json::array();
    for (int j = 0; j < t.d1; ++j) {
      Json b = Json::array();
      for (int k = 0; k < t.d2; ++k) b.push_back(t(i, j, k));
      a.push_back(std::move(b));
    }
    out.push_back(std::move(a));
  }
  return out;
}

// Flags shared by every subcommand; each one overrides the scenario only when given.
struct Common {
  std::string scenario;
  std::uint64_t seed = 0;
  bool wallclock = false;
  std::string fixture;
  int n = 0, m = 0;
  std::vector<std::string> params;
  std::string point;
  double tol = 0.0;
  int samples = 0;
  std::string out, csv, manifest;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& k) const {
    auto it = opts.find(k);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* app, Common& c, bool fixture_flags) {
  c.opts["scenario"] = app->add_option("--scenario", c.scenario, "JSON scenario file; flags override it");
  c.opts["seed"] = app->add_option("--seed", c.seed, "seed for randomized checks");
  app->add_flag("--wallclock", c.wallclock, "stamp manifests with UTC time instead of a logical clock");
  c.opts["tol"] = app->add_option("--tol", c.tol, "tolerance for invariant checks");
  c.opts["out"] = app->add_option("--out", c.out, "output path (JSON or JSON-lines); stdout when absent");
  c.opts["manifest"] = app->add_option("--manifest", c.manifest, "write a run manifest here");
  if (!fixture_flags) return;
  c.opts["fixture"] = app->add_option("--fixture", c.fixture, "d-metric fixture name");
  c.opts["n"] = app->add_option("--n", c.n, "horizontal dimension");
  c.opts["m"] = app->add_option("--m", c.m, "vertical dimension");
  c.opts["param"] = app->add_option("--param", c.params, "fixture parameter key=value, repeatable");
  c.opts["point"] = app->add_option("--point", c.point, "evaluation point u = (x, y) as csv");
  c.opts["samples"] = app->add_option("--samples", c.samples, "number of random sample points");
}

Scenario build_scenario(const Common& c, const std::string& mode) {
  Scenario sc = c.scenario.empty() ? Scenario{} : load_scenario(c.scenario);
  sc.mode = mode;
  if (c.given("fixture")) sc.fixture.name = c.fixture;
  if (c.given("n")) sc.fixture.n = c.n;
  if (c.given("m")) sc.fixture.m = c.m;
  if (c.given("param")) {
    for (const auto& p : c.params) {
      std::string name;
      Params kv;
      parse_init("p:" + p, name, kv);
      for (const auto& [k, v] : kv) sc.fixture.params[k] = v;
    }
  }
  if (c.given("point")) sc.point = parse_csv_numbers(c.point);
  if (c.given("tol")) sc.tol = c.tol;
  if (c.given("samples")) sc.samples = c.samples;
  if (c.given("seed")) sc.seed = c.seed;
  if (c.given("out")) sc.output.jsonl = c.out;
  if (c.given("csv")) sc.output.csv = c.csv;
  if (c.given("manifest")) sc.output.manifest = c.manifest;
  apply_seed_override(sc);
  return sc;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write", path);
  out << text;
  if (!out) throw IoError("write failed", path);
}

CheckResult check(std::string name, double residual, double tol, std::string note = {}) {
  return {std::move(name), residual, tol, std::isfinite(residual) && residual <= tol, std::move(note)};
}

std::vector<VecD> sample_points(const DMetric& dm, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VecD> pts;
  for (int i = 0; i < count; ++i) pts.push_back(dm.domain.sample(rng));
  return pts;
}

// Writes the manifest if requested and turns its verdict into an exit code.
int finish(RunManifest& m, const Scenario& sc, RunClock& clock) {
  if (m.finished.empty()) m.finished = clock.stamp();
  if (!sc.output.manifest.empty()) emit(sc.output.manifest, m.to_json().dump(2) + "\n");
  for (const auto& g : m.groups)
    for (const auto& c : g.checks)
      if (!c.pass)
        std::cerr << "FAIL " << g.title << "/" << c.name << " residual " << c.residual << " tol " << c.tol
                  << (c.note.empty() ? "" : " (" + c.note + ")") << "\n";
  return m.pass() ? kPass : kFail;
}

RunManifest start_manifest(const std::string& command, const Scenario& sc, RunClock& clock) {
  RunManifest m;
  m.command = command;
  m.scenario = scenario_to_json(sc);
  m.seed = sc.seed;
  m.started = clock.stamp();
  return m;
}

int run_nconn(const Scenario& sc, RunClock& clock) {
  RunManifest man = start_manifest("nconn", sc, clock);
  DMetric dm = fixture_dmetric(sc.fixture);
  VecD u = fixture_point(dm, sc.point);
  auto W = anholonomy<double>(dm.N, u);
  auto om = nconnection_curvature<double>(dm.N, u);
  const int D = dm.dim();
  double w_asym = 0.0, om_asym = 0.0;
  for (int g = 0; g < D; ++g)
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) w_asym = std::max(w_asym, std::abs(W(g, a, b) + W(g, b, a)));
  for (int a = 0; a < dm.m; ++a)
    for (int i = 0; i < dm.n; ++i)
      for (int j = 0; j < dm.n; ++j) om_asym = std::max(om_asym, std::abs(om(a, i, j) + om(a, j, i)));
  const double inverse =
      (coframe_matrix<double>(dm.N, u) * frame_matrix<double>(dm.N, u).transpose() - MatD::Identity(D, D))
          .cwiseAbs()
          .maxCoeff();
  man.add("nconn", check("W-antisymmetry", w_asym, 1e-12));
  man.add("nconn", check("Omega-antisymmetry", om_asym, 1e-12));
  man.add("nconn", check("frame-coframe-duality", inverse, 1e-12));
  Json out = output_header("nconn", sc.seed, scenario_to_json(sc));
  out["point"] = std::vector<double>(u.data(), u.data() + u.size());
  out["N"] = matrix_json(dm.N(u));
  out["Omega"] = tensor_json(om);
  out["W"] = tensor_json(W);
  out["frame"] = matrix_json(frame_matrix<double>(dm.N, u));
  out["coframe"] = matrix_json(coframe_matrix<double>(dm.N, u));
  emit(sc.output.jsonl, out.dump(2) + "\n");
  return finish(man, sc, clock);
}

int run_geometry(const Scenario& sc, bool verify, RunClock& clock) {
  RunManifest man = start_manifest("geometry", sc, clock);
  DMetric dm = fixture_dmetric(sc.fixture);
  DConnection dc = canonical_dconnection(dm, sc.tm);
  VecD u = fixture_point(dm, sc.point);
  auto c = dc.coeffs<double>(u);
  auto t = dtorsion<double>(dc, u);
  auto rb = ricci_at<double>(dc, u);
  Json out = output_header("geometry", sc.seed, scenario_to_json(sc));
  out["point"] = std::vector<double>(u.data(), u.data() + u.size());
  out["g"] = matrix_json(dm.g(u));
  out["h"] = matrix_json(dm.h(u));
  out["N"] = matrix_json(dm.N(u));
  out["connection"] = {{"Lh", tensor_json(c.Lh)}, {"Lv", tensor_json(c.Lv)}, {"Ch", tensor_json(c.Ch)},
                       {"Cv", tensor_json(c.Cv)}};
  out["torsion"] = {{"hh", tensor_json(t.hh)}, {"hv", tensor_json(t.hv)}, {"vhh", tensor_json(t.vhh)},
                    {"vvh", tensor_json(t.vvh)}, {"vv", tensor_json(t.vv)}};
  out["ricci"] = {{"R_ij", matrix_json(rb.Rhh)}, {"R_ia", matrix_json(rb.Rhv)}, {"R_ai", matrix_json(rb.Rvh)},
                  {"S_ab", matrix_json(rb.Svv)}, {"R", rb.Rs},  {"S", rb.Ss}};
  man.add("geometry", check("compatibility", compatibility_residual(dc, u), sc.tol, "at the point"));
  if (verify) {
    double compat = 0.0, pure = 0.0, mixed = 0.0;
    for (const VecD& q : sample_points(dm, sc.samples, sc.seed)) {
      compat = std::max(compat, compatibility_residual(dc, q));
      auto tq = dtorsion<double>(dc, q);
      pure = std::max({pure, max_abs(tq.hh), max_abs(tq.vv)});
      auto om = nconnection_curvature<double>(dm.N, q);
      for (std::size_t k = 0; k < om.data.size(); ++k) mixed = std::max(mixed, std::abs(tq.vhh.data[k] - om.data[k]));
    }
    const std::string note = std::to_string(sc.samples) + " random points";
    man.add("verify", check("compatibility", compat, sc.tol, note));
    man.add("verify", check("torsion-hh-vv", pure, 1e-10, note));
    man.add("verify", check("torsion-vhh-minus-Omega", mixed, sc.tol, note));
    Json res = Json::object();
    for (const auto& ch : man.groups.back().checks) res[ch.name] = ch.residual;
    out["verify"] = res;
  }
  emit(sc.output.jsonl, out.dump(2) + "\n");
  return finish(man, sc, clock);
}

int run_constframe(const Scenario& sc, RunClock& clock) {
  RunManifest man = start_manifest("constframe", sc, clock);
  DMetric dm = fixture_dmetric(sc.fixture);
  auto rep = constant_curvature_check(dm, sample_points(dm, sc.samples, sc.seed), sc.tol, sc.tm);
  Json out = output_header("constframe", sc.seed, scenario_to_json(sc));
  Json curv = Json::object();
  for (const auto& [k, b] : rep.curvature) {
    curv[k] = {{"spread", b.spread}, {"maximum", b.maximum}, {"pass", b.pass}};
    man.add("constframe", check("spread/" + k, b.spread, sc.tol));
  }
  Json tors = Json::object();
  for (const auto& [k, v] : rep.torsion) tors[k] = v;
  out["curvature"] = curv;
  out["torsion"] = tors;
  out["coefficient_max"] = rep.coefficient_max;
  out["tol"] = rep.tol;
  out["pass"] = rep.pass;
  emit(sc.output.jsonl, out.dump(2) + "\n");
  return finish(man, sc, clock);
}

int run_ricci_cmd(const Scenario& sc, RunClock& clock) {
  RunManifest man = start_manifest("ricci", sc, clock);
  FlowTrajectory t = run_ricci(sc);
  for (const auto& c : ricci_checks(t, sc.tol)) man.add("ricci", c);
  emit(sc.output.jsonl, jsonl_string(output_header("ricci", sc.seed, scenario_to_json(sc)), ricci_records(t)));
  if (!sc.output.csv.empty()) write_csv(sc.output.csv, ricci_csv(t));
  return finish(man, sc, clock);
}

Json run_meta(const SolitonRun& run) {
  if (!run.sg) return soliton_meta(run.traj);
  const auto& g = run.states.front().grid;
  return Json{{"grid", g.M}, {"length", g.L}, {"flow", "sg"}};
}

int run_soliton_cmd(const Scenario& sc, RunClock& clock) {
  RunManifest man = start_manifest("soliton", sc, clock);
  SolitonRun run = run_soliton(sc.soliton, sc.seed);
  for (const auto& c : soliton_checks(run)) man.add("soliton", c);
  emit(sc.output.jsonl,
       jsonl_string(output_header("soliton", sc.seed, scenario_to_json(sc), run_meta(run)), soliton_run_records(run)));
  if (!sc.output.csv.empty()) write_csv(sc.output.csv, soliton_run_csv(run));
  return finish(man, sc, clock);
}

int run_combined_cmd(const Scenario& sc, RunClock& clock) {
  CombinedResult res = combined_run(sc, clock);
  std::vector<Json> records;
  for (auto r : ricci_records(res.ricci)) {
    Json tagged{{"record", "ricci"}};
    tagged.update(r);
    records.push_back(std::move(tagged));
  }
  for (std::size_t i = 0; i < res.runs.size(); ++i)
    for (auto r : soliton_run_records(res.runs[i])) {
      Json tagged{{"record", "soliton"}, {"snapshot", i}, {"curvature", res.curvatures[i]}};
      tagged.update(r);
      records.push_back(std::move(tagged));
    }
  emit(sc.output.jsonl, jsonl_string(output_header("combined", sc.seed, scenario_to_json(sc)), records));
  if (!sc.output.csv.empty()) {
    CsvTable table = ricci_csv(res.ricci);
    table.columns.push_back("soliton_curvature");
    for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].push_back(res.curvatures[i]);
    write_csv(sc.output.csv, table);
  }
  return finish(res.manifest, sc, clock);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ricci flows and curve-flow hierarchies on nonholonomic manifolds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common nconn_c, geo_c, cf_c, ricci_c, sol_c, comb_c, ver_c;
  auto* nconn = app.add_subcommand("nconn", "N-connection, anholonomy and N-curvature at a point");
  add_common(nconn, nconn_c, true);

  auto* geo = app.add_subcommand("geometry", "canonical d-connection, torsion and Ricci blocks at a point");
  add_common(geo, geo_c, true);
  bool tm = false, verify_flag = false;
  geo->add_flag("--tm", tm, "tangent-bundle mode");
  geo->add_flag("--verify", verify_flag, "run the invariant suite over random samples");

  auto* cf = app.add_subcommand("constframe", "constant-coefficient curvature report");
  add_common(cf, cf_c, true);
  bool cf_tm = false;
  cf->add_flag("--tm", cf_tm, "tangent-bundle mode");

  std::string chi_end, dchi, grid, kappa, lambda_mode, lambda, representation, every;
  auto* ricci = app.add_subcommand("ricci", "nonholonomic Ricci flow of a fixture");
  add_common(ricci, ricci_c, true);
  ricci_c.opts["csv"] = ricci->add_option("--csv", ricci_c.csv, "CSV diagnostic summary path");
  auto* o_chi_end = ricci->add_option("--chi-end", chi_end, "final flow parameter");
  auto* o_dchi = ricci->add_option("--dchi", dchi, "flow step");
  auto* o_grid = ricci->add_option("--grid", grid, "nodes per axis, csv of n + m counts");
  auto* o_kappa = ricci->add_option("--kappa", kappa, "N schedule rate, N(chi) = (1 + kappa chi) N0");
  auto* o_lmode = ricci->add_option("--lambda-mode", lambda_mode, "fixed, normalized or dimension");
  auto* o_lambda = ricci->add_option("--lambda", lambda, "Einstein constant for the fixed mode");
  auto* o_rep = ricci->add_option("--representation", representation, "modal or spectral");
  auto* o_every = ricci->add_option("--every", every, "keep every k-th snapshot");

  std::string channel, s_flow, s_init;
  int s_dim = 0, s_grid = 0, s_every = 0;
  double s_length = 0, s_tau_end = 0, s_dtau = 0, s_curv = 0;
  std::vector<CLI::Option*> sol_opts;
  auto add_soliton_flags = [&](CLI::App* sub) {
    sol_opts.push_back(sub->add_option("--channel", channel, "h or v"));
    sol_opts.push_back(sub->add_option("--dim", s_dim, "curve-flow components (n - 1)"));
    sol_opts.push_back(sub->add_option("--flow", s_flow, "k0, k1, k2 or sg"));
    sol_opts.push_back(sub->add_option("--grid", s_grid, "periodic nodes M"));
    sol_opts.push_back(sub->add_option("--length", s_length, "period L"));
    sol_opts.push_back(sub->add_option("--tau-end", s_tau_end, "final flow time"));
    sol_opts.push_back(sub->add_option("--init", s_init, "catalog curve, name:key=value,..."));
    sol_opts.push_back(sub->add_option("--dtau", s_dtau, "time step; 0 picks a stable default"));
    sol_opts.push_back(sub->add_option("--curvature", s_curv, "frozen scalar curvature R or S"));
    sol_opts.push_back(sub->add_option("--every", s_every, "keep every k-th snapshot"));
  };
  auto* sol = app.add_subcommand("soliton", "curve-flow hierarchy run on one channel");
  add_common(sol, sol_c, false);
  sol_c.opts["csv"] = sol->add_option("--csv", sol_c.csv, "CSV conservation summary path");
  add_soliton_flags(sol);

  auto* comb = app.add_subcommand("combined", "one curve-flow run per Ricci snapshot");
  add_common(comb, comb_c, false);
  comb_c.opts["csv"] = comb->add_option("--csv", comb_c.csv, "CSV summary path");

  auto* ver = app.add_subcommand("verify", "run the invariant suite and write a manifest");
  add_common(ver, ver_c, false);
  std::vector<int> criteria;
  ver->add_option("--criteria", criteria, "subset of criterion ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  auto apply_soliton = [&](Scenario& sc) {
    auto given = [&](int i) { return sol_opts.size() > static_cast<std::size_t>(i) && sol_opts[i]->count() > 0; };
    if (given(0)) sc.soliton.channel = parse_channel(channel);
    if (given(1)) sc.soliton.dim = s_dim;
    if (given(2)) sc.soliton.flow = s_flow;
    if (given(3)) sc.soliton.grid = s_grid;
    if (given(4)) sc.soliton.length = s_length;
    if (given(5)) sc.soliton.tau_end = s_tau_end;
    if (given(6)) parse_init(s_init, sc.soliton.init, sc.soliton.init_params);
    if (given(7)) sc.soliton.dtau = s_dtau;
    if (given(8)) sc.soliton.curvature = s_curv;
    if (given(9)) sc.soliton.every = s_every;
  };

  try {
    if (*nconn) {
      Scenario sc = build_scenario(nconn_c, "geometry");
      validate_scenario(sc);
      RunClock clock(nconn_c.wallclock);
      return run_nconn(sc, clock);
    }
    if (*geo) {
      Scenario sc = build_scenario(geo_c, "geometry");
      if (tm) sc.tm = true;
      validate_scenario(sc);
      RunClock clock(geo_c.wallclock);
      return run_geometry(sc, verify_flag, clock);
    }
    if (*cf) {
      Scenario sc = build_scenario(cf_c, "constframe");
      if (cf_tm) sc.tm = true;
      validate_scenario(sc);
      RunClock clock(cf_c.wallclock);
      return run_constframe(sc, clock);
    }
    if (*ricci) {
      Scenario sc = build_scenario(ricci_c, "ricci");
      auto number = [](const std::string& s, const char* key) {
        auto v = parse_csv_numbers(s);
        if (v.size() != 1) throw ConfigError(std::string("--") + key + " needs one number");
        return v[0];
      };
      if (o_chi_end->count()) sc.ricci.chi_end = number(chi_end, "chi-end");
      if (o_dchi->count()) sc.ricci.dchi = number(dchi, "dchi");
      if (o_kappa->count()) sc.ricci.kappa = number(kappa, "kappa");
      if (o_lambda->count()) sc.ricci.lambda = number(lambda, "lambda");
      if (o_lmode->count()) sc.ricci.lambda_mode = parse_lambda_mode(lambda_mode);
      if (o_rep->count()) sc.ricci.representation = parse_representation(representation);
      if (o_every->count()) sc.ricci.every = static_cast<int>(number(every, "every"));
      if (o_grid->count()) {
        sc.ricci.grid = parse_grid(grid);
      } else if (!ricci_c.given("scenario") && static_cast<int>(sc.ricci.grid.size()) != sc.fixture.n + sc.fixture.m) {
        sc.ricci.grid.assign(sc.fixture.n + sc.fixture.m, 1);
        for (int i = 0; i < sc.fixture.n; ++i) sc.ricci.grid[i] = 3;
      }
      validate_scenario(sc);
      RunClock clock(ricci_c.wallclock);
      return run_ricci_cmd(sc, clock);
    }
    if (*sol) {
      Scenario sc = build_scenario(sol_c, "soliton");
      apply_soliton(sc);
      validate_scenario(sc);
      RunClock clock(sol_c.wallclock);
      return run_soliton_cmd(sc, clock);
    }
    if (*comb) {
      Scenario sc = build_scenario(comb_c, "combined");
      validate_scenario(sc);
      RunClock clock(comb_c.wallclock);
      return run_combined_cmd(sc, clock);
    }
    if (*ver) {
      Scenario sc = build_scenario(ver_c, "geometry");
      for (int id : criteria)
        if (id < 1 || id > criterion_count()) throw ConfigError("no criterion " + std::to_string(id));
      RunClock clock(ver_c.wallclock);
      RunManifest m = verify_manifest(sc.seed, criteria, clock);
      const std::string text = m.to_json().dump(2) + "\n";
      emit(sc.output.jsonl.empty() ? sc.output.manifest : sc.output.jsonl, text);
      for (const auto& g : m.groups) {
        const CheckResult* w = g.worst();
        std::cerr << (g.pass() ? "PASS " : "FAIL ") << g.id << " " << g.title;
        if (w) std::cerr << " [" << w->name << " " << w->residual << " / " << w->tol << "]";
        std::cerr << "\n";
      }
      return m.pass() ? kPass : kFail;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const BlowUpError& e) {
    std::cerr << "blow-up: " << e.what() << "\n";
    return kBlowUp;
  } catch (const FlowSingularityError& e) {
    std::cerr << "flow singularity: " << e.what() << "\n";
    return kBlowUp;
  } catch (const HyperbolicityError& e) {
    std::cerr << "hyperbolicity lost: " << e.what() << "\n";
    return kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
