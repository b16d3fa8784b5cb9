// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Usage: acceptance [path-to-anholoflow] [seed]

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "anholoflow/flow_io.hpp"
#include "anholoflow/verify.hpp"

#ifndef ANHOLOFLOW_TOOL
#define ANHOLOFLOW_TOOL "anholoflow"
#endif

using namespace anholoflow;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print(int id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
}

std::string detail_of(const CriterionResult& r) {
  std::ostringstream os;
  os.precision(3);
  const CheckResult* w = r.worst();
  if (!w) return "no checks";
  os << r.checks.size() << " checks, tightest " << w->name << " = " << w->residual
     << (w->lower_bound ? " >= " : " <= ") << w->tol;
  if (!w->pass && !w->note.empty()) os << " (" << w->note << ")";
  for (const auto& c : r.checks)
    if (!c.pass && &c != w) os << "; also failed " << c.name << " = " << c.residual;
  return os.str();
}

// Runs `anholoflow verify` with the seed and returns the manifest bytes, or "" on a launch error.
std::string tool_manifest(const std::string& tool, std::uint64_t seed, const std::string& out, int& status) {
  std::filesystem::remove(out);
  const std::string cmd = "\"" + tool + "\" verify --seed " + std::to_string(seed) + " --out \"" + out + "\" 2>/dev/null";
  status = std::system(cmd.c_str());
  return std::filesystem::exists(out) ? slurp(out) : "";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string tool = argc > 1 ? argv[1] : ANHOLOFLOW_TOOL;
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20261017;
  bool all = true;

  RunClock clock_a;
  const RunManifest a = verify_manifest(seed, {}, clock_a);
  for (const auto& r : a.groups) {
    print(r.id, r.pass(), r.title, detail_of(r));
    all = all && r.pass();
  }

  RunClock clock_b;
  const std::string lib_a = a.to_json().dump(2), lib_b = verify_manifest(seed, {}, clock_b).to_json().dump(2);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string out1 = (dir / "anholoflow_acceptance_1.json").string();
  const std::string out2 = (dir / "anholoflow_acceptance_2.json").string();
  int s1 = 0, s2 = 0;
  const std::string t1 = tool_manifest(tool, seed, out1, s1), t2 = tool_manifest(tool, seed, out2, s2);
  std::ostringstream d;
  const bool tool_ok = !t1.empty() && t1 == t2;
  const bool lib_ok = lib_a == lib_b;
  const bool match = t1 == lib_a + "\n";
  d << "tool manifests " << (tool_ok ? "identical" : "differ") << " (" << t1.size() << " bytes), library manifests "
    << (lib_ok ? "identical" : "differ") << ", tool " << (match ? "matches" : "differs from") << " library";
  if (t1.empty()) d << "; could not run " << tool;
  const bool det = tool_ok && lib_ok && match;
  print(14, det, "verify twice with one seed gives byte-identical manifests", d.str());
  all = all && det;
  std::filesystem::remove(out1);
  std::filesystem::remove(out2);
  return all ? 0 : 1;
}
