#include "pqlap/config.hpp"
#include "pqlap/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pqlap;
namespace fs = std::filesystem;

namespace {

json base_eigen() {
  return json::parse(R"({
    "command": "eigen1",
    "mesh": {"domain": "interval", "nx": 32},
    "params": {"p": 3.0, "q": 2.0, "alpha": 0.25}
  })");
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pqlap_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::vector<std::string>& diags, const std::string& needle) {
  for (const auto& d : diags)
    if (d.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, OverridesCreateAndRetype) {
  json doc = base_eigen();
  apply_override(doc, "solver.tol_residual=1e-6");
  apply_override(doc, "mesh.nx=48");
  apply_override(doc, "params.relaxed=true");
  apply_override(doc, "output.dir=somewhere");
  EXPECT_DOUBLE_EQ(doc["solver"]["tol_residual"].get<double>(), 1e-6);
  EXPECT_EQ(doc["mesh"]["nx"].get<int>(), 48);
  EXPECT_TRUE(doc["params"]["relaxed"].get<bool>());
  EXPECT_EQ(doc["output"]["dir"].get<std::string>(), "somewhere");
  EXPECT_THROW(apply_override(doc, "novalue"), ParameterError);
}

TEST(Config, ValidDocumentHasNoDiagnostics) { EXPECT_TRUE(validate(base_eigen()).empty()); }

TEST(Config, BrokenCouplingIsExplained) {
  json doc = base_eigen();
  doc["params"]["beta"] = 0.1;  // the coupled value is 0
  const auto diags = validate(doc);
  EXPECT_TRUE(contains(diags, "coupling identity")) << diags.size();
}

TEST(Config, ZeroAlphaNeedsTheRelaxedPolicy) {
  json doc = base_eigen();
  doc["params"] = {{"p", 2.0}, {"q", 2.0}, {"alpha", 0.0}};
  EXPECT_TRUE(contains(validate(doc), "params.relaxed"));
  doc["params"]["relaxed"] = true;
  EXPECT_TRUE(validate(doc).empty());
}

TEST(Config, AllProblemsAreReportedTogether) {
  json doc = base_eigen();
  doc["command"] = "dance";
  doc["mesh"]["nx"] = "many";
  doc["solver"] = {{"max_iters", 2.5}};
  const auto diags = validate(doc);
  EXPECT_TRUE(contains(diags, "command"));
  EXPECT_TRUE(contains(diags, "mesh.nx"));
  EXPECT_TRUE(contains(diags, "solver.max_iters"));
}

TEST(Runner, Eigen1WritesItsArtifacts) {
  const fs::path dir = scratch("eigen1");
  std::vector<std::string> diags;
  const RunConfig cfg = parse_config(base_eigen(), diags);
  ASSERT_TRUE(diags.empty());
  const RunOutcome o = run(cfg, dir);
  EXPECT_EQ(o.status, kExitOk);
  EXPECT_EQ(o.result["status"], "ok");
  EXPECT_GT(o.result["lambda1"].get<double>(), 0.0);
  for (const char* f : {"result.json", "history.csv", "eigenfunction.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(slurp(dir / "history.csv").substr(0, 23), "iter,q_value,residual\n0");
  EXPECT_EQ(slurp(dir / "eigenfunction.csv").substr(0, 21), "vertex_index,x,u,v\n0,");
  fs::remove_all(dir);
}

TEST(Runner, IterationCapGivesStatusTwo) {
  json doc = base_eigen();
  doc["solver"]["max_iters"] = 1;
  std::vector<std::string> diags;
  const RunConfig cfg = parse_config(doc, diags);
  const fs::path dir = scratch("cap");
  const RunOutcome o = run(cfg, dir);
  EXPECT_EQ(o.status, kExitNotConverged);
  EXPECT_EQ(o.result["status"], "not_converged");
  fs::remove_all(dir);
}

TEST(Runner, LibraryErrorsBecomeStatusOne) {
  json doc = json::parse(R"({"command": "picone", "mesh": {"domain": "interval", "nx": 16},
    "params": {"p": 2, "q": 2, "alpha": 0, "relaxed": true},
    "picone": {"r": 2, "u": {"kind": "constant", "value": -1}, "v": {"kind": "bump"}}})");
  std::vector<std::string> diags;
  const RunConfig cfg = parse_config(doc, diags);
  ASSERT_TRUE(diags.empty());
  const fs::path dir = scratch("err");
  const RunOutcome o = run(cfg, dir);
  EXPECT_EQ(o.status, kExitConfig);
  EXPECT_TRUE(o.result.contains("error"));
  fs::remove_all(dir);
}

TEST(Runner, PiconeOnEqualFields) {
  json doc = json::parse(R"({"command": "picone", "mesh": {"domain": "rect", "nx": 8, "ny": 8},
    "params": {"p": 2, "q": 2, "alpha": 0, "relaxed": true},
    "picone": {"r": 2.5, "u": {"kind": "bump"}, "v": {"kind": "bump"}, "tol": 1e-12}})");
  std::vector<std::string> diags;
  const RunConfig cfg = parse_config(doc, diags);
  ASSERT_TRUE(diags.empty());
  const fs::path dir = scratch("picone");
  const RunOutcome o = run(cfg, dir);
  EXPECT_EQ(o.status, kExitOk);
  EXPECT_TRUE(o.result["pass"].get<bool>());
  EXPECT_LT(std::abs(o.result["min_l"].get<double>()), 1e-12);
  fs::remove_all(dir);
}

TEST(Runner, SweepWritesOneRowPerCell) {
  json doc = json::parse(R"({"command": "sweep", "mesh": {"domain": "interval", "nx": 32},
    "params": {"relaxed": true}, "sweep": {"p": [2.0, 2.5, 3.0]}})");
  std::vector<std::string> diags;
  const RunConfig cfg = parse_config(doc, diags);
  ASSERT_TRUE(diags.empty()) << diags.front();
  const fs::path dir = scratch("sweep");
  const RunOutcome o = run(cfg, dir, 2);
  EXPECT_EQ(o.status, kExitOk);
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(dir / "cell_002" / "result.json"));
  fs::remove_all(dir);
}

TEST(Runner, RepeatedRunsAgreeExceptForTheTimestamp) {
  std::vector<std::string> diags;
  const RunConfig cfg = parse_config(base_eigen(), diags);
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  json ra = json::parse(slurp((run(cfg, a), a / "result.json")));
  json rb = json::parse(slurp((run(cfg, b), b / "result.json")));
  ra.erase("timestamp");
  rb.erase("timestamp");
  EXPECT_EQ(ra, rb);
  EXPECT_EQ(slurp(a / "eigenfunction.csv"), slurp(b / "eigenfunction.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}
