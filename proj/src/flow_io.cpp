#include "anholoflow/flow_io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "anholoflow/errors.hpp"

namespace anholoflow {

const char* const kToolVersion = "0.1.0";

namespace {

const std::vector<std::string> kModes = {"geometry", "constframe", "ricci", "soliton", "combined"};
const std::vector<std::string> kFlows = {"k0", "k1", "k2", "sg"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

// Reads keys of one JSON object and rejects anything it did not ask for.
class Reader {
 public:
  Reader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("key '" + where() + "' must be an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const Json* find(const std::string& k) {
    seen_.insert(k);
    auto it = obj_.find(k);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& k, double& out) {
    if (const Json* j = find(k)) {
      if (!j->is_number()) throw ConfigError("key '" + key(k) + "' must be a number");
      out = j->get<double>();
    }
  }

  void integer(const std::string& k, int& out) {
    if (const Json* j = find(k)) {
      if (!j->is_number_integer()) throw ConfigError("key '" + key(k) + "' must be an integer");
      out = j->get<int>();
    }
  }

  void unsigned64(const std::string& k, std::uint64_t& out) {
    if (const Json* j = find(k)) {
      if (!j->is_number_integer() || j->get<long long>() < 0)
        throw ConfigError("key '" + key(k) + "' must be a non-negative integer");
      out = j->get<std::uint64_t>();
    }
  }

  void string(const std::string& k, std::string& out) {
    if (const Json* j = find(k)) {
      if (!j->is_string()) throw ConfigError("key '" + key(k) + "' must be a string");
      out = j->get<std::string>();
    }
  }

  void boolean(const std::string& k, bool& out) {
    if (const Json* j = find(k)) {
      if (!j->is_boolean()) throw ConfigError("key '" + key(k) + "' must be true or false");
      out = j->get<bool>();
    }
  }

  template <class T>
  void array(const std::string& k, std::vector<T>& out) {
    if (const Json* j = find(k)) {
      if (!j->is_array()) throw ConfigError("key '" + key(k) + "' must be an array");
      out.clear();
      for (const auto& e : *j) {
        if (!e.is_number() || (std::is_integral_v<T> && !e.is_number_integer()))
          throw ConfigError("key '" + key(k) + "' must hold " + (std::is_integral_v<T> ? "integers" : "numbers"));
        out.push_back(e.get<T>());
      }
    }
  }

  void params(const std::string& k, Params& out) {
    if (const Json* j = find(k)) {
      if (!j->is_object()) throw ConfigError("key '" + key(k) + "' must be an object of numbers");
      out.clear();
      for (const auto& [name, v] : j->items()) {
        if (!v.is_number()) throw ConfigError("key '" + key(k) + "." + name + "' must be a number");
        out[name] = v.get<double>();
      }
    }
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + key(k) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Json matrix_json(const MatD& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

MatD matrix_from_json(const Json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  MatD m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

Json vector_json(const VecD& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

int flow_k(const std::string& flow) { return flow == "k0" ? 0 : flow == "k1" ? 1 : 2; }

}  // namespace

LambdaMode parse_lambda_mode(const std::string& s) {
  if (s == "fixed") return LambdaMode::Fixed;
  if (s == "normalized") return LambdaMode::Normalized;
  if (s == "dimension") return LambdaMode::Dimension;
  throw ConfigError("unknown lambda mode '" + s + "' (fixed, normalized, dimension)");
}

std::string to_string(LambdaMode m) {
  switch (m) {
    case LambdaMode::Fixed:
      return "fixed";
    case LambdaMode::Normalized:
      return "normalized";
    default:
      return "dimension";
  }
}

Representation parse_representation(const std::string& s) {
  if (s == "modal") return Representation::Modal;
  if (s == "spectral") return Representation::Spectral;
  throw ConfigError("unknown representation '" + s + "' (modal, spectral)");
}

std::string to_string(Representation r) { return r == Representation::Modal ? "modal" : "spectral"; }

std::vector<double> parse_csv_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("'" + item + "' is not a number in '" + s + "'");
    }
  }
  return out;
}

std::vector<int> parse_grid(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_csv_numbers(s)) {
    if (v != std::floor(v) || v < 1) throw ConfigError("grid entries must be positive integers: '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void parse_init(const std::string& s, std::string& name, Params& params) {
  const auto colon = s.find(':');
  name = s.substr(0, colon);
  params.clear();
  if (colon == std::string::npos) return;
  std::stringstream ss(s.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("init parameter '" + item + "' needs key=value");
    const auto v = parse_csv_numbers(item.substr(eq + 1));
    if (v.size() != 1) throw ConfigError("init parameter '" + item + "' needs one number");
    params[item.substr(0, eq)] = v[0];
  }
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte);
    std::string what = e.what();
    const auto pos = what.find("parse error");
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                      (pos == std::string::npos ? what : what.substr(pos)));
  }
  Scenario sc;
  Reader r(root, "");
  r.string("mode", sc.mode);
  if (const Json* f = r.find("fixture")) {
    Reader fr(*f, "fixture");
    fr.string("name", sc.fixture.name);
    fr.integer("n", sc.fixture.n);
    fr.integer("m", sc.fixture.m);
    fr.params("params", sc.fixture.params);
    fr.finish();
  }
  if (const Json* j = r.find("ricci")) {
    Reader rr(*j, "ricci");
    std::string mode = to_string(sc.ricci.lambda_mode), rep = to_string(sc.ricci.representation);
    rr.number("chi_end", sc.ricci.chi_end);
    rr.number("dchi", sc.ricci.dchi);
    rr.array("grid", sc.ricci.grid);
    rr.number("kappa", sc.ricci.kappa);
    rr.string("lambda_mode", mode);
    rr.number("lambda", sc.ricci.lambda);
    rr.string("representation", rep);
    rr.integer("every", sc.ricci.every);
    rr.finish();
    try {
      sc.ricci.lambda_mode = parse_lambda_mode(mode);
      sc.ricci.representation = parse_representation(rep);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("key 'ricci': ") + e.what());
    }
  }
  if (const Json* j = r.find("soliton")) {
    Reader sr(*j, "soliton");
    std::string channel = channel_name(sc.soliton.channel);
    sr.string("channel", channel);
    sr.integer("dim", sc.soliton.dim);
    sr.string("flow", sc.soliton.flow);
    sr.integer("grid", sc.soliton.grid);
    sr.number("length", sc.soliton.length);
    sr.number("tau_end", sc.soliton.tau_end);
    sr.number("dtau", sc.soliton.dtau);
    if (const Json* init = sr.find("init")) {
      Reader ir(*init, "soliton.init");
      ir.string("name", sc.soliton.init);
      ir.params("params", sc.soliton.init_params);
      ir.finish();
    }
    sr.number("curvature", sc.soliton.curvature);
    sr.integer("every", sc.soliton.every);
    sr.finish();
    try {
      sc.soliton.channel = parse_channel(channel);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("key 'soliton.channel': ") + e.what());
    }
  }
  r.array("point", sc.point);
  r.boolean("tm", sc.tm);
  r.integer("samples", sc.samples);
  r.number("tol", sc.tol);
  r.unsigned64("seed", sc.seed);
  if (const Json* j = r.find("output")) {
    Reader orr(*j, "output");
    orr.string("jsonl", sc.output.jsonl);
    orr.string("csv", sc.output.csv);
    orr.string("manifest", sc.output.manifest);
    orr.finish();
  }
  r.finish();
  validate_scenario(sc);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

void validate_scenario(const Scenario& sc) {
  auto bad = [](const std::string& key, const std::string& why) {
    throw ConfigError("invalid value for key '" + key + "': " + why);
  };
  if (!contains(kModes, sc.mode)) bad("mode", "expected one of " + join(kModes));
  if (!contains(dmetric_names(), sc.fixture.name)) bad("fixture.name", "unknown fixture '" + sc.fixture.name + "'");
  if (sc.fixture.n < 1) bad("fixture.n", "must be >= 1");
  if (sc.fixture.m < sc.fixture.n) bad("fixture.m", "must be >= fixture.n");
  if (!(sc.tol > 0.0)) bad("tol", "must be > 0");
  if (sc.samples < 2) bad("samples", "must be >= 2");
  if (!sc.point.empty() && static_cast<int>(sc.point.size()) != sc.fixture.n + sc.fixture.m)
    bad("point", "needs n + m coordinates");
  const RicciSpec& r = sc.ricci;
  if (!(r.dchi > 0.0)) bad("ricci.dchi", "must be > 0");
  if (!(r.chi_end >= 0.0)) bad("ricci.chi_end", "must be >= 0");
  if (static_cast<int>(r.grid.size()) != sc.fixture.n + sc.fixture.m) bad("ricci.grid", "needs n + m node counts");
  for (int c : r.grid)
    if (c < 1) bad("ricci.grid", "node counts must be >= 1");
  if (r.every < 1) bad("ricci.every", "must be >= 1");
  const SolitonSpec& s = sc.soliton;
  if (s.dim < 1) bad("soliton.dim", "must be >= 1");
  if (!contains(kFlows, s.flow)) bad("soliton.flow", "expected one of " + join(kFlows));
  if (s.grid < 16 || s.grid % 2) bad("soliton.grid", "must be even and >= 16");
  if (!(s.length > 0.0)) bad("soliton.length", "must be > 0");
  if (!(s.tau_end >= 0.0)) bad("soliton.tau_end", "must be >= 0");
  if (!(s.dtau >= 0.0)) bad("soliton.dtau", "must be >= 0");
  if (!contains(curve_names(), s.init)) bad("soliton.init.name", "unknown curve '" + s.init + "'");
  if (s.every < 1) bad("soliton.every", "must be >= 1");
}

void apply_seed_override(Scenario& sc) {
  const char* env = std::getenv("ANHOLOFLOW_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("ANHOLOFLOW_SEED is not an unsigned integer: '") + env + "'");
  sc.seed = v;
}

Json scenario_to_json(const Scenario& sc) {
  Json params = Json::object();
  for (const auto& [k, v] : sc.fixture.params) params[k] = v;
  Json init_params = Json::object();
  for (const auto& [k, v] : sc.soliton.init_params) init_params[k] = v;
  Json point = Json::array();
  for (double p : sc.point) point.push_back(p);
  return Json{{"mode", sc.mode},
              {"fixture", {{"name", sc.fixture.name}, {"n", sc.fixture.n}, {"m", sc.fixture.m}, {"params", params}}},
              {"ricci",
               {{"chi_end", sc.ricci.chi_end},
                {"dchi", sc.ricci.dchi},
                {"grid", sc.ricci.grid},
                {"kappa", sc.ricci.kappa},
                {"lambda_mode", to_string(sc.ricci.lambda_mode)},
                {"lambda", sc.ricci.lambda},
                {"representation", to_string(sc.ricci.representation)},
                {"every", sc.ricci.every}}},
              {"soliton",
               {{"channel", channel_name(sc.soliton.channel)},
                {"dim", sc.soliton.dim},
                {"flow", sc.soliton.flow},
                {"grid", sc.soliton.grid},
                {"length", sc.soliton.length},
                {"tau_end", sc.soliton.tau_end},
                {"dtau", sc.soliton.dtau},
                {"init", {{"name", sc.soliton.init}, {"params", init_params}}},
                {"curvature", sc.soliton.curvature},
                {"every", sc.soliton.every}}},
              {"point", point},
              {"tm", sc.tm},
              {"samples", sc.samples},
              {"tol", sc.tol},
              {"seed", sc.seed},
              {"output", {{"jsonl", sc.output.jsonl}, {"csv", sc.output.csv}, {"manifest", sc.output.manifest}}}};
}

DMetric fixture_dmetric(const FixtureSpec& f) { return make_dmetric(f.name, f.n, f.m, f.params); }

VecD fixture_point(const DMetric& dm, const std::vector<double>& point) {
  if (point.empty()) return 0.5 * (dm.domain.lo + dm.domain.hi);
  if (static_cast<int>(point.size()) != dm.dim())
    throw ConfigError("point needs " + std::to_string(dm.dim()) + " coordinates, got " + std::to_string(point.size()));
  return Eigen::Map<const VecD>(point.data(), static_cast<Eigen::Index>(point.size()));
}

std::string RunClock::stamp() {
  if (!wall_) return "logical:" + std::to_string(++tick_);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void RunManifest::add(const std::string& group, const CheckResult& c) {
  auto it = std::find_if(groups.begin(), groups.end(), [&](const CriterionResult& g) { return g.title == group; });
  if (it == groups.end()) {
    groups.push_back({0, group, {}});
    it = groups.end() - 1;
  }
  for (const auto& existing : it->checks)
    if (existing.name == c.name) throw std::logic_error("duplicate manifest check '" + group + "/" + c.name + "'");
  it->checks.push_back(c);
}

void RunManifest::add(const CriterionResult& r) {
  for (const auto& g : groups)
    if (g.title == r.title) throw std::logic_error("duplicate manifest group '" + r.title + "'");
  groups.push_back(r);
}

bool RunManifest::pass() const {
  for (const auto& g : groups)
    if (!g.pass()) return false;
  return true;
}

Json check_json(const CheckResult& c) {
  Json j{{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}, {"tol", c.tol}};
  if (c.lower_bound) j["bound"] = "at-least";
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

Json RunManifest::to_json() const {
  Json gs = Json::array();
  for (const auto& g : groups) {
    Json checks = Json::array();
    for (const auto& c : g.checks) checks.push_back(check_json(c));
    Json entry{{"group", g.title}, {"pass", g.pass()}, {"checks", checks}};
    if (g.id > 0) entry["criterion"] = g.id;
    gs.push_back(std::move(entry));
  }
  return Json{{"tool", tool},         {"version", version},   {"command", command}, {"seed", seed},
              {"started", started},   {"finished", finished}, {"scenario", scenario}, {"pass", pass()},
              {"groups", gs}};
}

Json output_header(const std::string& kind, std::uint64_t seed, const Json& scenario, const Json& meta) {
  Json h{{"record", "header"}, {"tool", "anholoflow"}, {"version", kToolVersion}, {"kind", kind}, {"seed", seed}};
  if (!scenario.is_null()) h["scenario"] = scenario;
  if (!meta.empty()) h["meta"] = meta;
  return h;
}

Json soliton_meta(const SolitonTrajectory& t) {
  return Json{{"grid", t.grid.M}, {"length", t.grid.L},         {"channel", channel_name(t.channel)},
              {"k", t.k},         {"curvature", t.curvature},   {"dtau", t.dtau}};
}

std::vector<Json> ricci_records(const FlowTrajectory& t) {
  std::vector<Json> out;
  for (const auto& s : t.snaps) {
    Json nodes = Json::array();
    for (int f = 0; f < s.state.lattice.size(); ++f)
      nodes.push_back(Json{{"u", vector_json(s.state.lattice.node(f))},
                           {"g", matrix_json(s.state.g[f])},
                           {"h", matrix_json(s.state.h[f])},
                           {"R", s.geo[f].R},
                           {"S", s.geo[f].S}});
    out.push_back(Json{{"chi", s.state.chi},
                       {"lambda", s.state.lambda},
                       {"r", s.r},
                       {"R_mean", s.R_mean},
                       {"S_mean", s.S_mean},
                       {"offdiag", s.offdiag},
                       {"compat", s.compat},
                       {"asym", s.asym},
                       {"triangular", s.triangular},
                       {"projection", s.projection},
                       {"nodes", nodes}});
  }
  return out;
}

std::vector<Json> soliton_records(const SolitonTrajectory& t) {
  std::vector<Json> out;
  for (const auto& s : t.snaps)
    out.push_back(Json{{"tau", s.tau}, {"H", {s.H[0], s.H[1], s.H[2]}}, {"v", matrix_json(s.v)}});
  return out;
}

std::vector<Json> sg_records(const std::vector<SGState>& states) {
  std::vector<Json> out;
  for (const auto& s : states)
    out.push_back(Json{{"tau", s.tau},
                       {"conservation", s.conservation_residual()},
                       {"norm_defect", s.norm_defect()},
                       {"v", matrix_json(s.v)},
                       {"e_par", vector_json(s.e_par)},
                       {"e_perp", matrix_json(s.e_perp)}});
  return out;
}

SolitonTrajectory soliton_from_records(const Json& header, const std::vector<Json>& records) {
  if (!header.contains("meta")) throw ConfigError("soliton trajectory header lacks 'meta'");
  const Json& m = header["meta"];
  SolitonTrajectory t;
  t.grid = PeriodicGrid{m.at("grid").get<int>(), m.at("length").get<double>()};
  t.channel = parse_channel(m.at("channel").get<std::string>());
  t.k = m.at("k").get<int>();
  t.curvature = m.at("curvature").get<double>();
  t.dtau = m.at("dtau").get<double>();
  for (const auto& r : records) {
    SolitonSnapshot s;
    s.tau = r.at("tau").get<double>();
    for (int q = 0; q < 3; ++q) s.H[q] = r.at("H")[q].get<double>();
    s.v = matrix_from_json(r.at("v"));
    t.snaps.push_back(std::move(s));
  }
  return t;
}

std::string jsonl_string(const Json& header, const std::vector<Json>& records) {
  std::string out = header.dump() + "\n";
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write", path);
  out << text;
  if (!out) throw IoError("write failed", path);
}

}  // namespace

void write_jsonl(const std::string& path, const Json& header, const std::vector<Json>& records) {
  write_text(path, jsonl_string(header, records));
}

std::pair<Json, std::vector<Json>> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read", path);
  std::pair<Json, std::vector<Json>> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path + ":" + std::to_string(number) + ":" + std::to_string(e.byte) + ": bad JSON line");
    }
    if (number == 1)
      out.first = std::move(j);
    else
      out.second.push_back(std::move(j));
  }
  if (out.first.is_null()) throw ConfigError(path + ": missing header line");
  return out;
}

CsvTable ricci_csv(const FlowTrajectory& t) {
  CsvTable c{{"chi", "lambda", "r", "R_mean", "S_mean", "offdiag", "compat", "asym", "triangular", "projection"}, {}};
  for (const auto& s : t.snaps)
    c.rows.push_back(
        {s.state.chi, s.state.lambda, s.r, s.R_mean, s.S_mean, s.offdiag, s.compat, s.asym, s.triangular, s.projection});
  return c;
}

CsvTable soliton_csv(const SolitonTrajectory& t) {
  CsvTable c{{"tau", "H0", "H1", "H2"}, {}};
  for (const auto& s : t.snaps) c.rows.push_back({s.tau, s.H[0], s.H[1], s.H[2]});
  return c;
}

CsvTable sg_csv(const std::vector<SGState>& states) {
  CsvTable c{{"tau", "conservation", "norm_defect"}, {}};
  for (const auto& s : states) c.rows.push_back({s.tau, s.conservation_residual(), s.norm_defect()});
  return c;
}

std::string csv_string(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += "\n";
  char buf[40];
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out += (i ? "," : "") + std::string(buf);
    }
    out += "\n";
  }
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, csv_string(table)); }

SolitonRun run_soliton(const SolitonSpec& spec, std::uint64_t seed) {
  PeriodicGrid grid{spec.grid, spec.length};
  Params params = spec.init_params;
  if (spec.init == "smooth-random" && !params.count("seed")) params["seed"] = static_cast<double>(seed % 1000003);
  MatD v0 = make_curve(spec.init, grid, spec.dim, params);
  SolitonRun run;
  if (spec.flow != "sg") {
    CurveState s;
    s.grid = grid;
    s.v(spec.channel) = v0;
    (spec.channel == Channel::H ? s.R : s.S) = spec.curvature;
    run.traj = evolve(s, spec.channel, flow_k(spec.flow), spec.tau_end, spec.dtau, spec.every);
    return run;
  }
  run.sg = true;
  const double dtau = spec.dtau > 0.0 ? spec.dtau : 0.01;
  const int steps = spec.tau_end > 0.0 ? static_cast<int>(std::ceil(spec.tau_end / dtau - 1e-9)) : 0;
  const double h = steps ? spec.tau_end / steps : dtau;
  SGState s = sg_from_perp(grid, v0);
  run.states.push_back(s);
  for (int i = 1; i <= steps; ++i) {
    s = sg_minus1_flow(s, h, spec.curvature);
    if (i % spec.every == 0 || i == steps) run.states.push_back(s);
  }
  return run;
}

std::vector<CheckResult> soliton_checks(const SolitonRun& run, const std::string& prefix) {
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name, double res, double tol) {
    out.push_back({prefix + name, res, tol, std::isfinite(res) && res <= tol, ""});
  };
  if (run.sg) {
    double cons = 0.0, defect = 0.0;
    for (const auto& s : run.states) {
      cons = std::max(cons, s.conservation_residual());
      defect = std::max(defect, s.norm_defect());
    }
    add("sg-conservation", cons, 1e-8);
    add("sg-norm-defect", defect, 1e-10);
    return out;
  }
  const auto& t = run.traj;
  switch (t.k) {
    case 0:
      for (int q = 0; q < 3; ++q) add("H" + std::to_string(q) + "-drift", t.drift(q), 1e-8);
      break;
    case 1:
      add("H0-drift", t.drift(0), 1e-6);
      add("H1-drift", t.drift(1), 1e-5);
      break;
    default:
      for (int q = 0; q < 3; ++q) add("H" + std::to_string(q) + "-drift", t.drift(q), 1e-5);
  }
  return out;
}

std::vector<Json> soliton_run_records(const SolitonRun& run) {
  return run.sg ? sg_records(run.states) : soliton_records(run.traj);
}

CsvTable soliton_run_csv(const SolitonRun& run) { return run.sg ? sg_csv(run.states) : soliton_csv(run.traj); }

FlowTrajectory run_ricci(const Scenario& sc) {
  DMetric dm = fixture_dmetric(sc.fixture);
  Lattice lat(dm.domain, sc.ricci.grid);
  FlowState s0 = initial_flow_state(dm, lat, sc.ricci.kappa, sc.ricci.lambda_mode, sc.ricci.lambda,
                                    sc.ricci.representation);
  FlowTrajectory t = run_ricci_flow(s0, sc.ricci.chi_end, sc.ricci.dchi);
  if (sc.ricci.every > 1) {
    FlowTrajectory thin;
    thin.dchi = t.dchi;
    for (std::size_t i = 0; i < t.snaps.size(); ++i)
      if (i % sc.ricci.every == 0 || i + 1 == t.snaps.size()) thin.snaps.push_back(t.snaps[i]);
    return thin;
  }
  return t;
}

std::vector<CheckResult> ricci_checks(const FlowTrajectory& t, double tol) {
  double asym = 0.0, compat = 0.0;
  bool finite = true;
  for (const auto& s : t.snaps) {
    asym = std::max(asym, s.asym);
    compat = std::max(compat, s.compat);
    for (const auto& g : s.state.g) finite = finite && g.allFinite();
    for (const auto& h : s.state.h) finite = finite && h.allFinite();
  }
  return {{"block-symmetry", asym, 1e-10, asym <= 1e-10, ""},
          {"compatibility", compat, tol, compat <= tol, "canonical d-connection of each snapshot"},
          {"finite", finite ? 0.0 : 1.0, 0.0, finite, ""}};
}

namespace {

template <class F>
auto with_snapshot(int index, F&& f) -> decltype(f()) {
  const std::string tag = "snapshot " + std::to_string(index) + ": ";
  try {
    return f();
  } catch (const BlowUpError& e) {
    throw BlowUpError(tag + e.what(), e.tau());
  } catch (const HyperbolicityError& e) {
    throw HyperbolicityError(tag + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(tag + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  }
}

}  // namespace

CombinedResult combined_run(const Scenario& sc, RunClock& clock) {
  CombinedResult out;
  out.manifest.command = "combined";
  out.manifest.scenario = scenario_to_json(sc);
  out.manifest.seed = sc.seed;
  out.manifest.started = clock.stamp();
  out.ricci = run_ricci(sc);
  for (const auto& c : ricci_checks(out.ricci, sc.tol)) out.manifest.add("ricci", c);
  const int n = sc.fixture.n;
  for (int i = 0; i < static_cast<int>(out.ricci.snaps.size()); ++i) {
    const Snapshot& snap = out.ricci.snaps[i];
    SolitonSpec spec = sc.soliton;
    spec.curvature = spec.channel == Channel::H ? snap.R_mean : snap.S_mean;
    out.curvatures.push_back(spec.curvature);
    out.runs.push_back(with_snapshot(i, [&] { return run_soliton(spec, sc.seed); }));
    const std::string group = "snapshot " + std::to_string(i);
    for (const auto& c : soliton_checks(out.runs.back())) out.manifest.add(group, c);
    if (n > 1) {
      auto rep = einstein_extraction_check(out.ricci, i);
      if (rep.einstein <= sc.tol) {
        const double res = std::abs(snap.R_mean - (n - 1) * rep.lambda_hat);
        out.manifest.add(group, {"R-vs-lambda-hat", res, sc.tol, res <= sc.tol, "Einstein snapshot"});
      }
    }
  }
  out.manifest.finished = clock.stamp();
  return out;
}

RunManifest verify_manifest(std::uint64_t seed, const std::vector<int>& ids, RunClock& clock) {
  RunManifest m;
  m.command = "verify";
  m.seed = seed;
  m.scenario = Json{{"mode", "verify"}, {"seed", seed}, {"criteria", ids}};
  m.started = clock.stamp();
  for (auto& r : run_suite(seed, ids)) m.add(r);
  m.finished = clock.stamp();
  return m;
}

}  // namespace anholoflow
