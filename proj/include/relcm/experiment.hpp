#pragma once

// Experiment runner behind the relcm command line: JSON configuration,
// per-system suites that gate measured residuals, report.json / CSV output
// and parameter sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "relcm/coulomb_scalar.hpp"
#include "relcm/errors.hpp"
#include "relcm/free_nbody.hpp"
#include "relcm/integrate.hpp"
#include "relcm/minkowski.hpp"
#include "relcm/observables.hpp"
#include "relcm/pn_twobody.hpp"
#include "relcm/poisson.hpp"
#include "relcm/sv_twobody.hpp"

namespace relcm::experiment {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr double kPi = 3.14159265358979323846;

struct IntegratorSettings {
  std::string method = "rk45";  // rk45 | rk4
  double step = 1e-3;           // rk4 step
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::optional<double> sigma_end;
};

struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string system;  // free-nbody | pn2 | sv2 | coulomb-scalar | pb-suite
  std::uint64_t seed = 1;
  IntegratorSettings integrator;
  std::map<std::string, double> tolerances;  // per-check gate overrides
  Json params = Json::object();
  std::string out_dir;
  bool write_trajectory = true;
  bool write_plotdata = false;
  std::optional<SweepAxis> sweep;
};

inline bool known_system(std::string_view s) {
  return s == "free-nbody" || s == "pn2" || s == "sv2" || s == "coulomb-scalar" || s == "pb-suite";
}

namespace detail {

inline void require_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> known) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

inline double positive(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  const double v = j.get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive");
  return v;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  detail::require_keys(j, "config",
                       {"schema_version", "system", "seed", "integrator", "tolerances", "params", "output", "sweep"});
  ExperimentConfig cfg;
  if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version");
  if (j.contains("system")) {
    if (!j["system"].is_string()) throw ConfigError("config: system must be a string");
    cfg.system = j["system"].get<std::string>();
    if (!known_system(cfg.system)) throw ConfigError("config: unknown system '" + cfg.system + "'");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("config: seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("integrator")) {
    const Json& in = j["integrator"];
    detail::require_keys(in, "integrator", {"method", "step", "abs_tol", "rel_tol", "sigma_end"});
    if (in.contains("method")) {
      if (!in["method"].is_string()) throw ConfigError("integrator.method must be a string");
      cfg.integrator.method = in["method"].get<std::string>();
      if (cfg.integrator.method != "rk4" && cfg.integrator.method != "rk45")
        throw ConfigError("integrator.method must be rk4 or rk45");
    }
    if (in.contains("step")) cfg.integrator.step = detail::positive(in["step"], "integrator.step");
    if (in.contains("abs_tol")) cfg.integrator.abs_tol = detail::positive(in["abs_tol"], "integrator.abs_tol");
    if (in.contains("rel_tol")) cfg.integrator.rel_tol = detail::positive(in["rel_tol"], "integrator.rel_tol");
    if (in.contains("sigma_end")) cfg.integrator.sigma_end = detail::positive(in["sigma_end"], "integrator.sigma_end");
  }
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object()) throw ConfigError("tolerances must be an object");
    for (const auto& [name, gate] : j["tolerances"].items())
      cfg.tolerances[name] = detail::positive(gate, "tolerances." + name);
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("params must be an object");
    cfg.params = j["params"];
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    detail::require_keys(o, "output", {"dir", "trajectory", "plotdata"});
    if (o.contains("dir")) cfg.out_dir = o["dir"].get<std::string>();
    if (o.contains("trajectory")) cfg.write_trajectory = o["trajectory"].get<bool>();
    if (o.contains("plotdata")) cfg.write_plotdata = o["plotdata"].get<bool>();
  }
  if (j.contains("sweep")) {
    const Json& s = j["sweep"];
    detail::require_keys(s, "sweep", {"parameter", "values", "from", "to", "points"});
    if (!s.contains("parameter") || !s["parameter"].is_string()) throw ConfigError("sweep.parameter is required");
    SweepAxis axis{s["parameter"].get<std::string>(), {}};
    if (s.contains("values")) {
      if (!s["values"].is_array()) throw ConfigError("sweep.values must be an array");
      for (const auto& v : s["values"]) {
        if (!v.is_number()) throw ConfigError("sweep.values must be numbers");
        axis.values.push_back(v.get<double>());
      }
    } else if (s.contains("from") && s.contains("to") && s.contains("points")) {
      const double a = s["from"].get<double>(), b = s["to"].get<double>();
      const auto n = s["points"].get<long>();
      if (n < 0) throw ConfigError("sweep.points must be non-negative");
      for (long i = 0; i < n; ++i)
        axis.values.push_back(n == 1 ? a : (a * double(n - 1 - i) + b * double(i)) / double(n - 1));
    }
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.parameter + "' is empty");
    cfg.sweep = std::move(axis);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_config(Json::parse(in));
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

/// Typed access to the system-specific "params" block; unknown keys and
/// type mismatches are configuration errors.
class Params {
 public:
  Params(const Json& j, std::string_view system, std::initializer_list<std::string_view> known) : j_(j) {
    detail::require_keys(j, std::string(system) + " params", known);
  }

  double number(const std::string& key, double fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_number()) throw ConfigError("param " + key + " must be a number");
    const double v = j_[key].get<double>();
    if (!std::isfinite(v)) throw ConfigError("param " + key + " must be finite");
    return v;
  }
  long integer(const std::string& key, long fallback) const {
    if (!j_.contains(key)) return fallback;
    const double v = number(key, 0.0);
    if (v != std::floor(v)) throw ConfigError("param " + key + " must be an integer");
    return static_cast<long>(v);
  }
  bool flag(const std::string& key, bool fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_boolean()) throw ConfigError("param " + key + " must be true or false");
    return j_[key].get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    if (!j_.contains(key)) return fallback;
    if (!j_[key].is_string()) throw ConfigError("param " + key + " must be a string");
    return j_[key].get<std::string>();
  }
  bool has(const std::string& key) const { return j_.contains(key); }

 private:
  const Json& j_;
};

struct CheckRecord {
  std::string name;
  std::string tag;
  double measured = 0.0;
  double gate = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  std::string system;
  std::uint64_t seed = 0;
  Json metadata = Json::object();
  Json values = Json::object();
  std::vector<CheckRecord> checks;

  bool verdict() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
  }

  void check(const std::string& name, const std::string& tag, double measured, double gate,
             const std::map<std::string, double>& overrides) {
    if (auto it = overrides.find(name); it != overrides.end()) gate = it->second;
    checks.push_back({name, tag, measured, gate, std::isfinite(measured) && measured <= gate});
  }

  Json to_json() const {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["system"] = system;
    j["seed"] = seed;
    j["metadata"] = metadata;
    Json cs = Json::array();
    for (const auto& c : checks)
      cs.push_back({{"name", c.name}, {"tag", c.tag}, {"measured", c.measured}, {"gate", c.gate}, {"pass", c.pass}});
    j["checks"] = cs;
    j["values"] = values;
    j["verdict"] = verdict() ? "pass" : "fail";
    return j;
  }
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write_csv(std::ostream& out) const {
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    char buf[32];
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", row[i]);
        out << (i ? "," : "") << buf;
      }
      out << "\n";
    }
  }
};

struct RunResult {
  ExperimentReport report;
  Table trajectory;
  std::map<std::string, Table> plotdata;
};

namespace detail {

inline Trajectory integrate(const RhsFunction& rhs, const StateVector& y0, double s0, double s1,
                            const IntegratorSettings& in) {
  FlowProblem p{rhs, y0, s0, s1, {}};
  if (in.method == "rk4") return rk4_fixed(p, in.step);
  p.adaptive.abs_tol = in.abs_tol;
  p.adaptive.rel_tol = in.rel_tol;
  return rk45_adaptive(p);
}

inline void append(std::vector<double>& row, const FourVector& v) { row.insert(row.end(), v.c.begin(), v.c.end()); }
inline void append(std::vector<double>& row, const Vec3& v) { row.insert(row.end(), v.c.begin(), v.c.end()); }

inline std::vector<std::string> names(const std::string& prefix, std::size_t n) {
  static constexpr const char* kAxes[] = {"t", "x", "y", "z"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + "_" + (n == 4 ? kAxes[i] : kAxes[i + 1]));
  return out;
}

inline double scaled(double diff, double ref) { return std::fabs(diff) / std::fmax(1.0, std::fabs(ref)); }

inline Json to_json(const FourVector& v) { return Json::array({v[0], v[1], v[2], v[3]}); }
inline Json to_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

inline void trajectory_metadata(ExperimentReport& rep, const Trajectory& t, const IntegratorSettings& in) {
  rep.metadata["integrator"] = in.method;
  if (in.method == "rk4") {
    rep.metadata["step"] = in.step;
  } else {
    rep.metadata["abs_tol"] = in.abs_tol;
    rep.metadata["rel_tol"] = in.rel_tol;
  }
  rep.metadata["sigma_range"] = Json::array({t.sigma.front(), t.sigma.back()});
  rep.metadata["steps"] = t.size() - 1;
  rep.metadata["rejected_steps"] = t.rejected_steps;
}

inline LorentzMatrix random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Vec3 axis{unit(rng), unit(rng), unit(rng)};
  return rotation_matrix(axis, kPi * unit(rng));
}

inline Vec3 rotate(const LorentzMatrix& R, const Vec3& v) { return R(FourVector(0.0, v)).spatial(); }

}  // namespace detail

// ---------------------------------------------------------------- free-nbody

inline RunResult run_free_nbody(const ExperimentConfig& cfg) {
  const Params p(cfg.params, "free-nbody",
                 {"n", "equal_masses", "gauge", "mass_lo", "mass_hi", "max_boost_speed", "samples"});
  free_nbody::RandomSystemOptions opt;
  const long n = p.integer("n", 3);
  if (n < 1) throw ConfigError("free-nbody: n must be at least 1");
  opt.n = static_cast<std::size_t>(n);
  opt.equal_masses = p.flag("equal_masses", false);
  opt.mass_lo = p.number("mass_lo", 0.5);
  opt.mass_hi = p.number("mass_hi", 2.0);
  opt.max_boost_speed = p.number("max_boost_speed", 0.5);
  if (!(opt.mass_lo > 0.0) || opt.mass_hi < opt.mass_lo) throw ConfigError("free-nbody: invalid mass range");
  if (!(opt.max_boost_speed >= 0.0 && opt.max_boost_speed < 1.0))
    throw ConfigError("free-nbody: max_boost_speed must lie in [0, 1)");
  const std::string gauge_name = p.text("gauge", "lab");
  if (gauge_name != "lab" && gauge_name != "proper") throw ConfigError("free-nbody: gauge must be lab or proper");
  const auto gauge = gauge_name == "lab" ? free_nbody::Gauge::LabTime : free_nbody::Gauge::ProperTime;
  const long samples = p.integer("samples", 11);
  if (samples < 2) throw ConfigError("free-nbody: samples must be at least 2");
  const double s_end = cfg.integrator.sigma_end.value_or(10.0);
  const auto& tol = cfg.tolerances;

  std::mt19937_64 rng(cfg.seed);
  const auto sys = free_nbody::random_system(opt, rng);
  const auto G = free_nbody::solve_G(sys);
  const FourVector Q = free_nbody::shift_vector(sys, G);
  const FourVector ell_v = dualize(free_nbody::internal_ell(sys), sys.U());

  RunResult out;
  auto& rep = out.report;
  rep.system = "free-nbody";
  rep.seed = cfg.seed;
  rep.metadata["n"] = opt.n;
  rep.metadata["gauge"] = gauge_name;
  rep.metadata["sigma_range"] = Json::array({0.0, s_end});

  double gram = 0.0;
  for (const auto& part : sys.particles()) gram = std::fmax(gram, std::fabs(dot(G.G, part.u) - 1.0));
  rep.check("gram-residual", "free.gram-system", gram, 1e-10, tol);
  rep.check("g-dot-p", "free.gram-system", std::fabs(dot(G.G, sys.P()) - sys.M0()), 1e-10, tol);

  const auto parts0 = free_nbody::spatial_parts(sys, 0.0, gauge);
  FourVector qsum;
  double shell = 0.0;
  for (std::size_t a = 0; a < sys.size(); ++a) {
    qsum += parts0.q[a];
    const double m = sys.particles()[a].m;
    shell = std::fmax(shell, std::fabs(parts0.E[a] - std::sqrt(m * m + dot(parts0.q[a], parts0.q[a]))));
  }
  rep.check("sum-q", "free.cm-constraint", max_abs(qsum), 1e-12, tol);
  rep.check("energy-shell", "free.spatial-parts", shell, 1e-10, tol);

  const free_nbody::CmModel model{&sys, gauge};
  double q_drift = 0.0, r_rate = 0.0, gauge_diff = 0.0;
  out.trajectory.columns = {"sigma"};
  for (std::size_t a = 0; a < sys.size(); ++a)
    for (const auto& c : detail::names("x" + std::to_string(a + 1), 4)) out.trajectory.columns.push_back(c);
  for (const char* v : {"Q", "R1", "R2"})
    for (const auto& c : detail::names(v, 4)) out.trajectory.columns.push_back(c);
  const auto other_gauge = gauge == free_nbody::Gauge::LabTime ? free_nbody::Gauge::ProperTime
                                                               : free_nbody::Gauge::LabTime;
  for (long i = 0; i < samples; ++i) {
    const double sigma = s_end * double(i) / double(samples - 1);
    const auto sol = free_nbody::r1_r2_Q(sys, G, sigma, gauge);
    q_drift = std::fmax(q_drift, max_abs_diff(sol.Q, Q));
    gauge_diff = std::fmax(gauge_diff, max_abs_diff(free_nbody::r1_r2_Q(sys, G, sigma, other_gauge).Q, Q));
    for (auto which : {&free_nbody::ShiftSolutions::R1, &free_nbody::ShiftSolutions::R2}) {
      const FourVector rate = finite_diff_rate(
          [&](double s) { return free_nbody::r1_r2_Q(sys, G, s, gauge).*which; }, sigma, 1e-2);
      const FourVector res = cm_integration_residual(model, sigma, rate);
      r_rate = std::fmax(r_rate, detail::scaled(max_abs(res), max_abs(rate)));
    }
    std::vector<double> row{sigma};
    for (const auto& x : free_nbody::evolve(sys, sigma, gauge)) detail::append(row, x);
    detail::append(row, sol.Q);
    detail::append(row, sol.R1);
    detail::append(row, sol.R2);
    out.trajectory.rows.push_back(std::move(row));
  }
  rep.check("q-drift", "free.shift-vector", q_drift, 1e-10, tol);
  rep.check("q-dot-p", "free.shift-vector", std::fabs(dot(Q, sys.P())), 1e-10, tol);
  rep.check("q-dot-ell", "free.shift-vector", std::fabs(dot(Q, ell_v)), 1e-10, tol);
  rep.check("cm-integration-rate", "free.cm-integration", r_rate, 1e-8, tol);
  rep.check("gauge-independence", "free.shift-vector", gauge_diff, 1e-10, tol);

  const auto qq = free_nbody::qq_bracket_closed_form(sys, G);
  rep.check("q-squared", "free.qq-bracket", detail::scaled(std::fabs(dot(Q, Q) - qq.q_squared), qq.q_squared),
            1e-10, tol);
  const auto chart = free_nbody::to_chart(sys, 0.0, gauge);
  const auto gens = particle_generators();
  const auto qq_rep = lrl_selfbracket_check(free_nbody::shift_vector_observable(), gens, -qq.coefficient, chart);
  rep.check("qq-bracket", "free.qq-bracket", qq_rep.residual, 1e-6, tol);
  rep.check("qq-fitted-coefficient", "free.qq-bracket",
            std::fabs(qq_rep.fitted_coefficient - qq.coefficient), 1e-6, tol);
  const auto alg = verify_internal_rotation_algebra(chart, gens, free_nbody::shift_vector_observable());
  rep.check("internal-rotation-algebra", "internal-rotation-algebra", alg.max_residual(), 1e-6, tol);

  if (opt.n == 2) {
    rep.check("two-body-g-perp", "free.g-two-body", max_abs_diff(G.G_perp, free_nbody::g_perp_two_body(sys)), 1e-10,
              tol);
    if (opt.equal_masses) rep.check("equal-mass-shift", "free.equal-mass", max_abs(Q), 1e-12, tol);
  }

  rep.values["M"] = sys.M();
  rep.values["M0"] = sys.M0();
  rep.values["gram_condition"] = G.condition_number;
  rep.values["Q"] = detail::to_json(Q);
  rep.values["qq_coefficient"] = qq.coefficient;
  rep.values["qq_fitted"] = qq_rep.fitted_coefficient;
  rep.values["localizable"] = localizability_check(free_nbody::shift_vector_observable(), gens, qq.coefficient, chart).canonical;
  return out;
}

// ---------------------------------------------------------------- pn2

inline RunResult run_pn2(const ExperimentConfig& cfg) {
  const Params p(cfg.params, "pn2",
                 {"m1", "m2", "kappa", "c", "r_peri", "eccentricity", "periods", "equal_masses", "shift_rate_points"});
  pn::PNConfig pc;
  pc.m1 = p.number("m1", 1.0);
  pc.m2 = p.flag("equal_masses", false) ? pc.m1 : p.number("m2", 2.0);
  pc.kappa = p.number("kappa", -1.0);
  pc.c = p.number("c", 1.0);
  pc.validate();
  const double r_peri = p.number("r_peri", 1.0);
  const double ecc = p.number("eccentricity", 0.5);
  const long periods = p.integer("periods", 3);
  if (periods < 1) throw ConfigError("pn2: periods must be at least 1");
  const long rate_points = p.integer("shift_rate_points", 5);
  const bool bound = ecc < 1.0;
  const auto& tol = cfg.tolerances;
  const auto rhs = pn::flow_rhs(pc);

  std::mt19937_64 rng(cfg.seed);
  const LorentzMatrix R = detail::random_rotation(rng);
  pn::PNState peri = pn::perihelion_state(pc, r_peri, ecc);
  peri.r = detail::rotate(R, peri.r);
  peri.v = detail::rotate(R, peri.v);
  const double T = bound ? pn::kepler_period(peri, pc) : 0.0;
  const double span = bound ? double(periods) * T : cfg.integrator.sigma_end.value_or(20.0);
  const double offset = bound ? 0.3 * T : 0.5 * span;

  // Start away from perihelion so that every passage is interior to the run.
  const Trajectory back = detail::integrate(rhs, pn::pack(peri), 0.0, -offset, cfg.integrator);
  const Trajectory traj = detail::integrate(rhs, back.states.back(), 0.0, span, cfg.integrator);

  RunResult out;
  auto& rep = out.report;
  rep.system = "pn2";
  rep.seed = cfg.seed;
  detail::trajectory_metadata(rep, traj, cfg.integrator);
  rep.metadata["bound"] = bound;

  const pn::PNState s0 = pn::unpack(traj.states.front(), 0.0);
  const auto cf0 = pn::closed_forms(s0, pc);
  const double E0 = pn::energy(s0, pc);
  const Vec3 L0 = pn::angular_momentum(s0, pc);
  const double K_scale = norm(cf0.K);
  double e_drift = 0.0, l_drift = 0.0, q_drift = 0.0, k_forms = 0.0, q_prop = 0.0, k_drift = 0.0;
  Vec3 q_window = cf0.Q;
  long window = 0;
  out.trajectory.columns = {"t"};
  for (const char* v : {"r", "v"})
    for (const auto& c : detail::names(v, 3)) out.trajectory.columns.push_back(c);
  out.trajectory.columns.push_back("E");
  for (const char* v : {"K", "Q"})
    for (const auto& c : detail::names(v, 3)) out.trajectory.columns.push_back(c);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.sigma[i];
    const pn::PNState s = pn::unpack(traj.states[i], t);
    const auto cf = pn::closed_forms(s, pc);
    e_drift = std::fmax(e_drift, detail::scaled(std::fabs(pn::energy(s, pc) - E0), E0));
    l_drift = std::fmax(l_drift, detail::scaled(max_abs_diff(pn::angular_momentum(s, pc), L0), norm(L0)));
    k_forms = std::fmax(k_forms, detail::scaled(max_abs_diff(cf.K, cf.K_alt), K_scale));
    q_prop = std::fmax(q_prop, max_abs_diff(cf.Q, pc.shift_prefactor() * cf.K));
    k_drift = std::fmax(k_drift, max_abs_diff(cf.K, cf0.K));
    if (bound && long(t / T) != window) {
      window = long(t / T);
      q_window = cf.Q;
    }
    q_drift = std::fmax(q_drift, max_abs_diff(cf.Q, bound ? q_window : cf0.Q));
    std::vector<double> row{t};
    detail::append(row, s.r);
    detail::append(row, s.v);
    row.push_back(pn::energy(s, pc));
    detail::append(row, cf.K);
    detail::append(row, cf.Q);
    out.trajectory.rows.push_back(std::move(row));
  }
  rep.check("energy-drift", "pn.newton-flow", e_drift, 1e-9, tol);
  rep.check("angular-momentum-drift", "pn.newton-flow", l_drift, 1e-9, tol);
  rep.check(bound ? "q-drift-per-period" : "q-drift", "pn.shift-vector", q_drift, 1e-8, tol);
  rep.check("k-forms", "pn.lrl-vector", k_forms, 1e-12, tol);
  rep.check("q-proportional-to-k", "pn.shift-vector", q_prop, 1e-12, tol);
  if (pc.m1 == pc.m2) rep.check("equal-mass-shift", "pn.equal-mass", max_abs_diff(cf0.Q, Vec3{}), 1e-15, tol);

  double align = 0.0;
  const auto peris = pn::perihelia(pc, traj);
  for (const auto& e : peris) align = std::fmax(align, angle_between(pn::unpack(e.state, e.sigma).r, cf0.K));
  if (peris.empty()) throw NumericalError("pn2: no perihelion passage inside the run");
  rep.check("perihelion-alignment", "pn.lrl-direction", align, 1e-6, tol);

  double rate_res = 0.0;
  const double h = bound ? 1e-3 * T : 1e-2;
  for (long k = 0; k < rate_points; ++k) {
    const std::size_t i = 2 + (traj.size() - 5) * std::size_t(k) / std::size_t(std::max(rate_points - 1, 1L));
    const double t = traj.sigma[i];
    const Vec3 expected = pn::dR_dt(pn::unpack(traj.states[i], t), pc);
    for (auto which : {&pn::ClosedForms::R1, &pn::ClosedForms::R2}) {
      const Vec3 fd = finite_diff_rate(
          [&](double tt) { return pn::closed_forms(pn::unpack(rk4_advance(rhs, t, traj.states[i], tt, 32), tt), pc).*which; },
          t, h);
      rate_res = std::fmax(rate_res, detail::scaled(max_abs_diff(fd, expected), norm(expected)));
    }
  }
  rep.check("shift-rate", "pn.cm-integration", rate_res, 1e-8, tol);

  if (pc.m1 != pc.m2) {
    std::vector<double> mags;
    for (double c : {1.0, 10.0, 100.0}) {
      pn::PNConfig pcc = pc;
      pcc.c = c;
      mags.push_back(norm(pn::closed_forms(s0, pcc).Q));
    }
    const double slope = (std::log(mags[2]) - std::log(mags[0])) / (std::log(100.0) - std::log(1.0));
    rep.check("c-scaling-slope", "pn.c-scaling", std::fabs(slope + 2.0), 1e-3, tol);
    rep.values["c_scaling_slope"] = slope;
  }
  rep.values["K"] = detail::to_json(cf0.K);
  rep.values["Q"] = detail::to_json(cf0.Q);
  rep.values["energy"] = E0;
  if (bound) rep.values["period"] = T;
  rep.values["perihelion_passages"] = peris.size();
  return out;
}

// ---------------------------------------------------------------- sv2

struct SvSetup {
  sv::SVConfig model;
  sv::InitRequest init;
};

inline SvSetup sv_setup(const ExperimentConfig& cfg) {
  const Params p(cfg.params, "sv2",
                 {"m1", "m2", "mass_ratio", "kappa", "alpha", "chi", "lambda", "M_target", "bound", "ell_target",
                  "freeze_longitudinal", "rest_frame", "max_boost_speed"});
  SvSetup s;
  auto& m = s.model;
  m.m1 = p.number("m1", 1.0);
  m.m2 = p.has("mass_ratio") ? p.number("mass_ratio", 2.0) * m.m1 : p.number("m2", 2.0);
  m.kappa = p.number("kappa", 0.3);
  m.alpha = static_cast<int>(p.integer("alpha", 1));
  m.chi = static_cast<int>(p.integer("chi", 1));
  m.lambda_gauge = p.number("lambda", 1.0);
  m.freeze_longitudinal = p.flag("freeze_longitudinal", true);
  m.validate();
  if (p.has("M_target") && p.has("bound")) throw ConfigError("sv2: give either M_target or bound, not both");
  s.init.M_target = p.has("M_target") ? p.number("M_target", 0.0)
                                      : m.M0() + (p.flag("bound", true) ? -0.05 : 0.05);
  s.init.ell_target = p.number("ell_target", 0.5);
  s.init.rest_frame = p.flag("rest_frame", false);
  s.init.max_boost_speed = p.number("max_boost_speed", 0.5);
  s.init.seed = cfg.seed;
  return s;
}

inline RunResult run_sv2(const ExperimentConfig& cfg) {
  const SvSetup setup = sv_setup(cfg);
  const auto& m = setup.model;
  const auto& tol = cfg.tolerances;
  const sv::SVPhase p0 = sv::init_state(m, setup.init);
  const double s_end = cfg.integrator.sigma_end.value_or(20.0);
  const Trajectory traj = detail::integrate(sv::flow_rhs(m), sv::pack(p0), 0.0, s_end, cfg.integrator);

  RunResult out;
  auto& rep = out.report;
  rep.system = "sv2";
  rep.seed = cfg.seed;
  detail::trajectory_metadata(rep, traj, cfg.integrator);

  const auto inv0 = sv::invariants(p0);
  const double b = sv::b_of_M(inv0.M2, m.m1, m.m2);
  const auto cf0 = sv::closed_forms(p0, m);
  const AntisymTensor2 J0 = sv::total_angular_momentum(p0);
  const FourVector XI0 = sv::center_of_inertia(p0);

  rep.check("init-phi", "sv.constraint", std::fabs(sv::constraint_phi(p0, m)), 1e-12, tol);
  rep.check("init-light-cone", "sv.light-cone", std::fabs(dot(p0.x, p0.x)), 1e-12, tol);
  rep.check("phi-forms", "sv.constraint", std::fabs(sv::constraint_phi(p0, m) - sv::constraint_phi_pi(p0, m)), 1e-12,
            tol);
  rep.check("pi-orthogonality", "sv.internal-momentum", std::fabs(dot(sv::pi_internal(p0), p0.P)), 1e-12, tol);

  double phi = 0.0, lc = 0.0, xperp = 0.0, pj = 0.0, k = 0.0, q = 0.0, xi = 0.0, dx_res = 0.0, dpi_res = 0.0,
         k2 = 0.0, q_k = 0.0, r1_forms = 0.0;
  out.trajectory.columns = {"sigma"};
  for (const char* v : {"z", "P", "x", "q"})
    for (const auto& c : detail::names(v, 4)) out.trajectory.columns.push_back(c);
  out.trajectory.columns.push_back("M");
  out.trajectory.columns.push_back("ell2");
  for (const char* v : {"K", "Q"})
    for (const auto& c : detail::names(v, 4)) out.trajectory.columns.push_back(c);
  out.trajectory.columns.push_back("phi");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double sigma = traj.sigma[i];
    const sv::SVPhase s = sv::unpack(traj.states[i]);
    sv::check_chi(s, m, sigma);
    const auto inv = sv::invariants(s);
    const auto cf = sv::closed_forms(s, m);
    const double ph = sv::constraint_phi(s, m);
    phi = std::fmax(phi, std::fabs(ph));
    lc = std::fmax(lc, std::fabs(dot(s.x, s.x)));
    const FourVector X = sv::x_perp(s);
    xperp = std::fmax(xperp, detail::scaled(dot(X, X) - inv.s * inv.s / inv.M2, inv.s * inv.s / inv.M2));
    pj = std::fmax(pj, std::fmax(max_abs_diff(s.P, p0.P), max_abs_diff(sv::total_angular_momentum(s), J0)));
    k = std::fmax(k, max_abs_diff(cf.K, cf0.K));
    q = std::fmax(q, max_abs_diff(cf.Q_from_K, cf0.Q_from_K));
    xi = std::fmax(xi, max_abs_diff(sv::center_of_inertia(s), XI0));
    q_k = std::fmax(q_k, max_abs_diff(cf.Q, cf.Q_from_K));
    r1_forms = std::fmax(r1_forms, max_abs_diff(cf.R1, cf.R1_alt));
    k2 = std::fmax(k2, sv::k_squared_check(s, m, 1e-6));

    const auto r = sv::phase_rate(s, m);
    const double lam = m.lambda(s);
    const Projector D(s.P);
    const FourVector Pi = sv::pi_internal(s);
    dx_res = std::fmax(dx_res, max_abs_diff(D.apply(r.dx), lam * Pi));
    const double dA = dot(s.P, r.dq), ds = dot(s.P, r.dx);
    const FourVector dPi = r.dq - ((dA * inv.s - inv.A * ds) / (inv.s * inv.s)) * s.x - (inv.A / inv.s) * r.dx;
    const double g = sv::g_of_M(inv.M2, m);
    dpi_res = std::fmax(dpi_res, max_abs_diff(dPi, (-lam * inv.M2 * g / (inv.s * inv.s * inv.s)) * X));

    std::vector<double> row{sigma};
    for (const FourVector* v : {&s.z, &s.P, &s.x, &s.q}) detail::append(row, *v);
    row.push_back(std::sqrt(inv.M2));
    row.push_back(half_square(sv::internal_ell(s)));
    detail::append(row, cf.K);
    detail::append(row, cf.Q_from_K);
    row.push_back(ph);
    out.trajectory.rows.push_back(std::move(row));
  }
  rep.check("phi-drift", "sv.constraint", phi, 1e-9, tol);
  rep.check("light-cone-drift", "sv.light-cone", lc, 1e-9, tol);
  rep.check("x-perp-square", "sv.light-cone", xperp, 1e-10, tol);
  rep.check("p-j-drift", "sv.conserved-generators", pj, 1e-9, tol);
  rep.check("k-drift", "sv.lrl-vector", k, 1e-8, tol);
  rep.check("q-drift", "sv.shift-vector", q, 1e-8, tol);
  rep.check("inertia-centre-drift", "sv.centre-of-inertia", xi, 1e-9, tol);
  rep.check("dx-perp-rate", "sv.internal-pair", dx_res, 1e-8, tol);
  rep.check("dpi-rate", "sv.internal-pair", dpi_res, 1e-8, tol);
  rep.check("k-squared", "sv.k-squared", k2, 1e-9, tol);
  rep.check("q-equals-ck", "sv.shift-vector", q_k, 1e-10, tol);
  rep.check("r1-forms", "sv.cm-integration", r1_forms, 1e-10, tol);

  const auto chart = sv::to_chart(p0);
  const auto gens = sv::generators();
  const auto kk = lrl_selfbracket_check(sv::k_observable(m), gens, b, chart);
  rep.check("kk-bracket", "lrl-self-bracket", kk.residual, 1e-6, tol);
  rep.check("kk-proportionality", "lrl-self-bracket", kk.proportionality_residual, 1e-6, tol);
  rep.check("ell-dot-k-invariance", "lrl-self-bracket", kk.ell_dot_k_invariance, 1e-6, tol);
  const double qq_coef = sv::qq_coefficient(inv0.M2, m);
  const auto loc = localizability_check(sv::q_observable(m), gens, qq_coef, chart);
  rep.check("qq-bracket", "sv.qq-bracket", loc.residual, 1e-6, tol);

  rep.values["M"] = std::sqrt(inv0.M2);
  rep.values["M_target"] = setup.init.M_target;
  rep.values["M0"] = m.M0();
  rep.values["b"] = b;
  rep.values["b_target"] = sv::b_of_M(setup.init.M_target * setup.init.M_target, m.m1, m.m2);
  rep.values["kk_fitted"] = kk.fitted_coefficient;
  if (const double bt = rep.values["b_target"].get<double>(); bt != 0.0) {
    rep.values["eta"] = boundness_index(bt);
  } else {
    rep.values["eta"] = "transition";
  }
  rep.values["qq_coefficient"] = qq_coef;
  rep.values["localizable"] = loc.canonical;
  rep.values["K"] = detail::to_json(cf0.K);
  rep.values["Q"] = detail::to_json(cf0.Q_from_K);
  return out;
}

// ---------------------------------------------------------------- coulomb-scalar

inline RunResult run_coulomb(const ExperimentConfig& cfg) {
  const Params p(cfg.params, "coulomb-scalar", {"m", "kappa", "sign", "r0", "p_r", "p_t", "revolutions"});
  coulomb::CSConfig cc;
  cc.m = p.number("m", 1.0);
  cc.kappa = p.number("kappa", -0.3);
  cc.sign = static_cast<int>(p.integer("sign", 1));
  cc.validate();
  const long revolutions = p.integer("revolutions", 5);
  if (revolutions < 1) throw ConfigError("coulomb-scalar: revolutions must be at least 1");
  const auto& tol = cfg.tolerances;
  const coulomb::CSState s0 =
      coulomb::planar_state(p.number("r0", 1.0), p.number("p_r", 0.1), p.number("p_t", 0.5));
  const double E = coulomb::hamiltonian(s0, cc);
  const bool bound = E < cc.m;
  const auto rhs = coulomb::flow_rhs(cc);

  // Extend the run until the requested number of perihelion passages is seen.
  double span = cfg.integrator.sigma_end.value_or(50.0);
  Trajectory traj;
  std::vector<RefinedExtremum> peris;
  for (;;) {
    traj = detail::integrate(rhs, coulomb::pack(s0), 0.0, span, cfg.integrator);
    peris = coulomb::perihelia(cc, traj);
    if (!bound || peris.size() >= std::size_t(revolutions) + 1 || cfg.integrator.sigma_end) break;
    if (span > 1e6) throw NumericalError("coulomb-scalar: too few perihelion passages", span);
    span *= 2.0;
  }

  RunResult out;
  auto& rep = out.report;
  rep.system = "coulomb-scalar";
  rep.seed = cfg.seed;
  detail::trajectory_metadata(rep, traj, cfg.integrator);
  rep.metadata["bound"] = bound;

  const Vec3 L0 = coulomb::angular_momentum(s0);
  const Vec3 K0 = coulomb::lrl_vector(s0, cc);
  double h = 0.0, l = 0.0, k = 0.0, p2 = 0.0;
  out.trajectory.columns = {"t"};
  for (const char* v : {"r", "p"})
    for (const auto& c : detail::names(v, 3)) out.trajectory.columns.push_back(c);
  out.trajectory.columns.push_back("H");
  for (const auto& c : detail::names("K", 3)) out.trajectory.columns.push_back(c);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto s = coulomb::unpack(traj.states[i]);
    const double Hs = coulomb::hamiltonian(s, cc);
    const Vec3 Ks = coulomb::lrl_vector(s, cc);
    h = std::fmax(h, std::fabs(Hs - E));
    l = std::fmax(l, max_abs_diff(coulomb::angular_momentum(s), L0));
    k = std::fmax(k, max_abs_diff(Ks, K0));
    p2 = std::fmax(p2, std::fabs(dot(s.p, s.p) - coulomb::momentum_squared_from_energy(E, norm(s.r), cc)));
    std::vector<double> row{traj.sigma[i]};
    detail::append(row, s.r);
    detail::append(row, s.p);
    row.push_back(Hs);
    detail::append(row, Ks);
    out.trajectory.rows.push_back(std::move(row));
  }
  rep.check("energy-drift", "coulomb.hamiltonian", h, 1e-10, tol);
  rep.check("angular-momentum-drift", "coulomb.hamiltonian", l, 1e-10, tol);
  rep.check("momentum-identity", "coulomb.momentum-square", p2, 1e-10, tol);
  rep.check("k-drift", "coulomb.lrl-vector", k, 1e-9, tol);
  const double ell = norm(L0);
  rep.check("k-magnitude", "coulomb.lrl-magnitude",
            std::fabs(dot(K0, K0) - coulomb::lrl_magnitude_squared(E, ell, cc)), 1e-9, tol);
  rep.check("orbit-residual", "coulomb.conic-orbit", coulomb::orbit_residual(coulomb::states_of(traj), cc), 1e-8,
            tol);

  double align = 0.0, precession = 0.0;
  for (const auto& e : peris) {
    const Vec3 r = coulomb::unpack(e.state).r;
    align = std::fmax(align, coulomb::line_angle(r, K0));
    precession = std::fmax(precession, angle_between(r, coulomb::unpack(peris.front().state).r));
  }
  if (bound) {
    if (peris.size() < std::size_t(revolutions) + 1)
      throw NumericalError("coulomb-scalar: fewer perihelion passages than requested revolutions");
    rep.check("perihelion-precession", "coulomb.non-precession", precession, 1e-6, tol);
  }
  if (!peris.empty()) rep.check("axis-alignment", "coulomb.lrl-direction", align, 1e-6, tol);

  rep.values["energy"] = E;
  rep.values["K"] = detail::to_json(K0);
  rep.values["perihelion_passages"] = peris.size();
  return out;
}

// ---------------------------------------------------------------- pb-suite

/// Free systems whose Gram matrix is worse conditioned than this are redrawn: the shift
/// vector then loses too many digits for finite-difference brackets to resolve.
inline constexpr double kPbSuiteMaxGramCondition = 1e6;

inline RunResult run_pb_suite(const ExperimentConfig& cfg) {
  const Params p(cfg.params, "pb-suite", {"chart", "states", "n"});
  const std::string chart_name = p.text("chart", "free");
  if (chart_name != "free" && chart_name != "sv") throw ConfigError("pb-suite: chart must be free or sv");
  const long states = p.integer("states", 20);
  const long n = p.integer("n", 3);
  if (states < 1) throw ConfigError("pb-suite: states must be at least 1");
  if (n < 1 || n > 4) throw ConfigError("pb-suite: n must lie in 1..4");
  const auto& tol = cfg.tolerances;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double poincare = 0.0, antisym = 0.0, product = 0.0, deriv = 0.0, jacobi = 0.0, internal = 0.0, self = 0.0,
         prop = 0.0, inv = 0.0, qq = 0.0, pi_p = 0.0;
  long redrawn = 0;
  for (long i = 0; i < states; ++i) {
    CanonicalState chart;
    Generators gens;
    VectorObservable A;
    double F = 0.0;
    if (chart_name == "free") {
      free_nbody::RandomSystemOptions opt;
      opt.n = static_cast<std::size_t>(n);
      auto sys = free_nbody::random_system(opt, rng);
      while (free_nbody::solve_G(sys).condition_number > kPbSuiteMaxGramCondition) {
        sys = free_nbody::random_system(opt, rng);
        ++redrawn;
      }
      chart = free_nbody::to_chart(sys, 0.0);
      gens = particle_generators();
      A = free_nbody::shift_vector_observable();
      F = -free_nbody::qq_bracket_closed_form(sys).coefficient;
    } else {
      sv::SVConfig m;
      m.kappa = 0.1 + 0.4 * unit(rng);
      const double dM = 0.02 + 0.08 * unit(rng);
      sv::InitRequest rq;
      rq.M_target = m.M0() + (i % 2 == 0 ? -dM : dM);
      // bound orbits need l < k / (2 sqrt(-b))
      const double M2 = rq.M_target * rq.M_target;
      const double d = m.m1 - m.alpha * m.m2;
      const double k = m.kappa * (M2 - d * d) / rq.M_target;
      const double b = sv::b_of_M(M2, m.m1, m.m2);
      const double ell_max = b < 0.0 ? k / (2.0 * std::sqrt(-b)) : 1.0;
      rq.ell_target = ell_max * (0.3 + 0.5 * unit(rng));
      rq.seed = rng();
      const auto ph = sv::init_state(m, rq);
      chart = sv::to_chart(ph);
      gens = sv::generators();
      A = sv::k_observable(m);
      F = sv::b_of_M(-dot(ph.P, ph.P), m.m1, m.m2);
      const auto pb = brackets(family_of(sv::pi_observable()), family_of(gens.P), chart);
      for (const auto& row : pb)
        for (double v : row) pi_p = std::fmax(pi_p, std::fabs(v));
      const auto loc = localizability_check(sv::q_observable(m), gens, sv::qq_coefficient(-dot(ph.P, ph.P), m), chart);
      qq = std::fmax(qq, loc.residual);
    }
    poincare = std::fmax(poincare, verify_poincare_algebra(chart, gens).residual);
    const auto fA = random_polynomial(chart.dimension(), rng);
    const auto fB = random_polynomial(chart.dimension(), rng);
    const auto fC = random_polynomial(chart.dimension(), rng);
    const auto rules = verify_bracket_rules(fA, fB, fC, chart);
    antisym = std::fmax(antisym, rules.antisymmetry);
    product = std::fmax(product, rules.product);
    deriv = std::fmax(deriv, rules.derivative);
    jacobi = std::fmax(jacobi, rules.jacobi);
    internal = std::fmax(internal, verify_internal_rotation_algebra(chart, gens, A).max_residual());
    const auto kk = lrl_selfbracket_check(A, gens, F, chart);
    self = std::fmax(self, kk.residual);
    prop = std::fmax(prop, kk.proportionality_residual);
    inv = std::fmax(inv, kk.ell_dot_k_invariance);
  }

  RunResult out;
  auto& rep = out.report;
  rep.system = "pb-suite";
  rep.seed = cfg.seed;
  rep.metadata["chart"] = chart_name;
  rep.metadata["states"] = states;
  if (chart_name == "free") {
    rep.metadata["n"] = n;
    rep.metadata["redrawn_ill_conditioned"] = redrawn;
  }
  rep.check("poincare-algebra", "poincare-algebra", poincare, 1e-6, tol);
  rep.check("antisymmetry", "bracket-rules", antisym, 1e-7, tol);
  rep.check("product-rule", "bracket-rules", product, 1e-7, tol);
  rep.check("derivative-rule", "bracket-rules", deriv, 1e-7, tol);
  rep.check("jacobi", "bracket-rules", jacobi, 1e-5, tol);
  rep.check("internal-rotation-algebra", "internal-rotation-algebra", internal, 1e-6, tol);
  rep.check("lrl-self-bracket", "lrl-self-bracket", self, 1e-6, tol);
  rep.check("lrl-proportionality", "lrl-self-bracket", prop, 1e-6, tol);
  rep.check("ell-dot-k-invariance", "lrl-self-bracket", inv, 1e-6, tol);
  if (chart_name == "sv") {
    rep.check("pi-translation-invariance", "sv.internal-momentum", pi_p, 1e-8, tol);
    rep.check("qq-bracket", "sv.qq-bracket", qq, 1e-6, tol);
  }
  return out;
}

// ---------------------------------------------------------------- dispatch

inline RunResult run(const ExperimentConfig& cfg) {
  if (cfg.system == "free-nbody") return run_free_nbody(cfg);
  if (cfg.system == "pn2") return run_pn2(cfg);
  if (cfg.system == "sv2") return run_sv2(cfg);
  if (cfg.system == "coulomb-scalar") return run_coulomb(cfg);
  if (cfg.system == "pb-suite") return run_pb_suite(cfg);
  throw ConfigError("no system selected");
}

struct SweepResult {
  Json report;
  bool pass = false;
  Table table;
};

/// Runs every point of the sweep axis concurrently and assembles the
/// aggregate report in axis order. For sv2 swept over M_target the report
/// tabulates sign(b) against sign(M - M0).
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep: no sweep axis configured");
  const SweepAxis& axis = *cfg.sweep;
  if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.parameter + "' is empty");

  std::vector<RunResult> results(axis.values.size());
  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t begin = 0; begin < axis.values.size(); begin += width) {
    std::vector<std::future<RunResult>> batch;
    for (std::size_t i = begin; i < std::min(begin + width, axis.values.size()); ++i) {
      ExperimentConfig point = cfg;
      point.sweep.reset();
      point.out_dir.clear();
      point.params[axis.parameter] = axis.values[i];
      batch.push_back(std::async(std::launch::async, [point] { return run(point); }));
    }
    for (std::size_t k = 0; k < batch.size(); ++k) results[begin + k] = batch[k].get();
  }

  SweepResult out;
  Json& j = out.report;
  j["schema_version"] = kSchemaVersion;
  j["system"] = cfg.system;
  j["seed"] = cfg.seed;
  j["parameter"] = axis.parameter;
  Json points = Json::array();
  bool all = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& rep = results[i].report;
    Json failed = Json::array();
    for (const auto& c : rep.checks)
      if (!c.pass) failed.push_back(c.name);
    points.push_back({{"value", axis.values[i]},
                      {"verdict", rep.verdict() ? "pass" : "fail"},
                      {"failed_checks", failed},
                      {"values", rep.values}});
    all = all && rep.verdict();
  }
  j["points"] = points;

  if (cfg.system == "sv2" && axis.parameter == "M_target") {
    out.table.columns = {"M_target", "M_minus_M0", "b", "kk_fitted", "sign_b", "sign_M_minus_M0"};
    bool consistent = true;
    Json rows = Json::array();
    for (const auto& r : results) {
      const double M = r.report.values["M_target"].get<double>();
      const double M0 = r.report.values["M0"].get<double>();
      const double b = r.report.values["b_target"].get<double>();
      const double fitted = r.report.values["kk_fitted"].get<double>();
      auto sgn = [](double v, double band) { return v > band ? 1 : (v < -band ? -1 : 0); };
      const int sb = sgn(b, 0.0), sm = sgn(M - M0, 0.0), sf = sgn(-fitted, 1e-9);
      consistent = consistent && sb == sm && sf == sm;
      out.table.rows.push_back({M, M - M0, b, fitted, double(sb), double(sm)});
      rows.push_back({{"M_target", M}, {"b", b}, {"kk_fitted", fitted}, {"sign_b", sb}, {"sign_M_minus_M0", sm}, {"eta", r.report.values["eta"]}});
    }
    j["boundness_table"] = rows;
    j["eta_transition_consistent"] = consistent;
    all = all && consistent;
  }
  j["verdict"] = all ? "pass" : "fail";
  out.pass = all;
  return out;
}

// ---------------------------------------------------------------- output

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

inline void write_table(const std::filesystem::path& path, const Table& t) {
  std::ostringstream os;
  t.write_csv(os);
  write_text(path, os.str());
}

inline void write_outputs(const ExperimentConfig& cfg, const RunResult& r) {
  if (cfg.out_dir.empty()) return;
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", r.report.to_json().dump(2) + "\n");
  if (cfg.write_trajectory && !r.trajectory.rows.empty()) write_table(dir / "trajectory.csv", r.trajectory);
  if (cfg.write_plotdata) {
    std::filesystem::create_directories(dir / "plotdata");
    write_table(dir / "plotdata" / (cfg.system + "_trajectory.csv"), r.trajectory);
    for (const auto& [name, table] : r.plotdata) write_table(dir / "plotdata" / (name + ".csv"), table);
  }
}

inline void write_outputs(const ExperimentConfig& cfg, const SweepResult& r) {
  if (cfg.out_dir.empty()) return;
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", r.report.dump(2) + "\n");
  if (!r.table.rows.empty()) {
    std::filesystem::create_directories(dir / "plotdata");
    write_table(dir / "plotdata" / "boundness.csv", r.table);
  }
}

}  // namespace relcm::experiment
