// pqlap: eigenvalues, Picone checks and resonant solves for coupled
// (p,q)-Laplacian systems, driven by a JSON config.

#include "pqlap/config.hpp"
#include "pqlap/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"coupled (p,q)-Laplacian eigen and resonance solver"};
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int jobs = 1;
  long long seed = -1;
  bool check_only = false;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "dotted-path override, e.g. solver.tol_residual=1e-8 (repeatable)");
  app.add_option("--out-dir", out_dir, "output directory (overrides output.dir)");
  app.add_option("--jobs", jobs, "concurrent sweep cells")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "random seed (overrides seed)")->check(CLI::NonNegativeNumber);
  app.add_flag("--check", check_only, "validate the config and exit");
  CLI11_PARSE(app, argc, argv);

  pqlap::json doc;
  try {
    std::ifstream in(config_path);
    doc = pqlap::json::parse(in);
    for (const auto& o : overrides) pqlap::apply_override(doc, o);
    if (seed >= 0) doc["seed"] = seed;
    if (!out_dir.empty()) doc["output"]["dir"] = out_dir;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pqlap::kExitConfig;
  }

  std::vector<std::string> diags;
  const pqlap::RunConfig cfg = pqlap::parse_config(doc, diags);
  for (const auto& d : diags) std::cerr << "config: " << d << "\n";
  if (check_only) {
    if (diags.empty()) std::cout << "config ok\n";
    return diags.empty() ? pqlap::kExitOk : pqlap::kExitConfig;
  }
  if (!diags.empty()) return pqlap::kExitConfig;

  try {
    const pqlap::RunOutcome o = pqlap::run(cfg, cfg.out_dir, jobs);
    if (o.result.contains("error")) std::cerr << "error: " << o.result["error"].get<std::string>() << "\n";
    std::cout << cfg.command << ": " << o.result["status"].get<std::string>() << " (" << cfg.out_dir
              << "/result.json)\n";
    return o.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pqlap::kExitConfig;
  }
}
