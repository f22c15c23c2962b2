// relcm: run, sweep and bracket-suite front end.
//
// Exit codes: 0 all gates pass, 1 a gate failed, 2 usage or config error,
// 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "relcm/experiment.hpp"

namespace ex = relcm::experiment;

namespace {

struct RunFlags {
  std::string system;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<long> n;
  bool equal_masses = false;
  std::optional<double> mass_ratio;
  bool bound = false;
  bool unbound = false;
  std::string integrator;
  std::optional<double> step;
  std::optional<double> sigma_end;
};

ex::ExperimentConfig base_config(const std::string& path) {
  return path.empty() ? ex::ExperimentConfig{} : ex::load_config(path);
}

void apply_common(ex::ExperimentConfig& cfg, const RunFlags& f) {
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.integrator.empty()) cfg.integrator.method = f.integrator;
  if (f.step) cfg.integrator.step = *f.step;
  if (f.sigma_end) cfg.integrator.sigma_end = *f.sigma_end;
}

ex::ExperimentConfig run_config(const RunFlags& f) {
  auto cfg = base_config(f.config);
  if (!f.system.empty()) {
    if (!cfg.system.empty() && cfg.system != f.system)
      throw relcm::ConfigError("config names system '" + cfg.system + "' but '" + f.system + "' was requested");
    cfg.system = f.system;
  }
  if (cfg.system.empty()) throw relcm::ConfigError("no system given on the command line or in the config");
  apply_common(cfg, f);
  if (f.n) cfg.params["n"] = *f.n;
  if (f.equal_masses) cfg.params["equal_masses"] = true;
  if (f.mass_ratio) cfg.params["mass_ratio"] = *f.mass_ratio;
  if (f.bound) cfg.params["bound"] = true;
  if (f.unbound) cfg.params["bound"] = false;
  return cfg;
}

void print_report(const ex::ExperimentReport& r) {
  for (const auto& c : r.checks)
    std::printf("%-4s %-28s %-26s measured %.3e gate %.1e\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.tag.c_str(),
                c.measured, c.gate);
  for (const auto& [key, value] : r.values.items()) std::printf("  %s = %s\n", key.c_str(), value.dump().c_str());
  std::printf("verdict: %s\n", r.verdict() ? "pass" : "fail");
}

int execute_run(const ex::ExperimentConfig& cfg) {
  const auto result = ex::run(cfg);
  ex::write_outputs(cfg, result);
  print_report(result.report);
  return result.report.verdict() ? 0 : 1;
}

int execute_sweep(const ex::ExperimentConfig& cfg) {
  const auto result = ex::run_sweep(cfg);
  ex::write_outputs(cfg, result);
  for (const auto& point : result.report["points"])
    std::printf("%-4s %s = %s\n", point["verdict"] == "pass" ? "ok" : "FAIL",
                result.report["parameter"].get<std::string>().c_str(), point["value"].dump().c_str());
  if (result.report.contains("eta_transition_consistent"))
    std::printf("eta transition at M = M0: %s\n",
                result.report["eta_transition_consistent"].get<bool>() ? "consistent" : "inconsistent");
  std::printf("verdict: %s\n", result.pass ? "pass" : "fail");
  return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relativistic centre-of-mass experiments"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run one system and gate its checks");
  run->add_option("system", rf.system, "free-nbody | pn2 | sv2 | coulomb-scalar | pb-suite (default: from --config)")
      ->check(CLI::IsMember({"free-nbody", "pn2", "sv2", "coulomb-scalar", "pb-suite"}));
  run->add_option("--config", rf.config, "JSON experiment config");
  run->add_option("--out", rf.out, "output directory for report.json and CSVs");
  run->add_option("--seed", rf.seed, "random seed");
  run->add_option("--n", rf.n, "particle count (free-nbody)");
  run->add_flag("--equal-masses", rf.equal_masses, "equal masses (free-nbody, pn2)");
  run->add_option("--mass-ratio", rf.mass_ratio, "m2 / m1 (sv2)");
  auto* bound = run->add_flag("--bound", rf.bound, "bound state (sv2)");
  run->add_flag("--unbound", rf.unbound, "unbound state (sv2)")->excludes(bound);
  run->add_option("--integrator", rf.integrator, "rk45 | rk4")->check(CLI::IsMember({"rk4", "rk45"}));
  run->add_option("--step", rf.step, "fixed step for rk4")->check(CLI::PositiveNumber);
  run->add_option("--sigma-end", rf.sigma_end, "end of the evolution parameter range")->check(CLI::PositiveNumber);

  std::string sweep_config, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("--config", sweep_config, "JSON experiment config with a sweep block")->required();
  sweep->add_option("--out", sweep_out, "output directory");

  RunFlags pf;
  std::string chart;
  std::optional<long> states;
  auto* pb = app.add_subcommand("pb-suite", "Finite-difference Poisson bracket suite");
  pb->add_option("--system", chart, "free | sv")->required()->check(CLI::IsMember({"free", "sv"}));
  pb->add_option("--states", states, "random states per chart");
  pb->add_option("--n", pf.n, "particle count for the free chart");
  pb->add_option("--seed", pf.seed, "random seed");
  pb->add_option("--config", pf.config, "JSON experiment config");
  pb->add_option("--out", pf.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return execute_run(run_config(rf));
    if (*sweep) {
      auto cfg = ex::load_config(sweep_config);
      if (cfg.system.empty()) throw relcm::ConfigError("sweep config must name a system");
      if (!sweep_out.empty()) cfg.out_dir = sweep_out;
      return execute_sweep(cfg);
    }
    auto cfg = base_config(pf.config);
    cfg.system = "pb-suite";
    apply_common(cfg, pf);
    cfg.params["chart"] = chart;
    if (states) cfg.params["states"] = *states;
    if (pf.n) cfg.params["n"] = *pf.n;
    return execute_run(cfg);
  } catch (const relcm::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const relcm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
