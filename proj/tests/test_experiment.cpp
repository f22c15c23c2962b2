#include <gtest/gtest.h>

#include "relcm/experiment.hpp"

using namespace relcm;
using namespace relcm::experiment;

namespace {

ExperimentConfig parse(const char* text) { return parse_config(Json::parse(text)); }

}  // namespace

TEST(Config, Defaults) {
  const auto cfg = parse(R"({"system": "pn2"})");
  EXPECT_EQ(cfg.system, "pn2");
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.integrator.method, "rk45");
  EXPECT_FALSE(cfg.sweep.has_value());
  EXPECT_TRUE(cfg.out_dir.empty());
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse(R"({"system": "pn2", "colour": 1})"), ConfigError);
  EXPECT_THROW(parse(R"({"system": "three-body"})"), ConfigError);
  EXPECT_THROW(parse(R"({"schema_version": 2, "system": "pn2"})"), ConfigError);
  EXPECT_THROW(parse(R"({"system": "pn2", "seed": -1})"), ConfigError);
  EXPECT_THROW(parse(R"({"system": "pn2", "integrator": {"method": "euler"}})"), ConfigError);
  EXPECT_THROW(parse(R"({"system": "pn2", "integrator": {"step": 0}})"), ConfigError);
  EXPECT_THROW(parse(R"({"system": "pn2", "tolerances": {"energy-drift": -1}})"), ConfigError);
  EXPECT_THROW(parse(R"({"system": "pn2", "output": {"folder": "x"}})"), ConfigError);
}

TEST(Config, SweepAxis) {
  const auto cfg = parse(R"({"system": "sv2", "sweep": {"parameter": "M_target", "from": 2.9, "to": 3.1, "points": 21}})");
  ASSERT_TRUE(cfg.sweep.has_value());
  ASSERT_EQ(cfg.sweep->values.size(), 21u);
  EXPECT_EQ(cfg.sweep->values[10], 3.0);
  EXPECT_EQ(cfg.sweep->values.front(), 2.9);
  EXPECT_EQ(cfg.sweep->values.back(), 3.1);
  const auto listed = parse(R"({"system": "sv2", "sweep": {"parameter": "kappa", "values": [0.1, 0.3]}})");
  EXPECT_EQ(listed.sweep->values, (std::vector<double>{0.1, 0.3}));
}

TEST(Config, EmptySweepIsAnError) {
  EXPECT_THROW(parse(R"({"system": "sv2", "sweep": {"parameter": "kappa", "values": []}})"), ConfigError);
  EXPECT_THROW(parse(R"({"system": "sv2", "sweep": {"parameter": "kappa", "from": 0, "to": 1, "points": 0}})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"system": "sv2", "sweep": {"values": [1]}})"), ConfigError);
  ExperimentConfig cfg;
  cfg.system = "sv2";
  EXPECT_THROW(run_sweep(cfg), ConfigError);
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Params, TypedAccess) {
  const Json j = Json::parse(R"({"n": 3, "flag": true, "name": "lab", "x": 0.5})");
  const Params p(j, "test", {"n", "flag", "name", "x"});
  EXPECT_EQ(p.integer("n", 0), 3);
  EXPECT_TRUE(p.flag("flag", false));
  EXPECT_EQ(p.text("name", ""), "lab");
  EXPECT_EQ(p.number("x", 0.0), 0.5);
  EXPECT_EQ(p.number("missing", 7.0), 7.0);
  EXPECT_THROW(p.integer("x", 0), ConfigError);
  EXPECT_THROW(p.flag("n", false), ConfigError);
  EXPECT_THROW(p.number("name", 0.0), ConfigError);
  EXPECT_THROW(Params(j, "test", {"n"}), ConfigError);
}

TEST(Runner, UnknownParamIsRejected) {
  auto cfg = parse(R"({"system": "pn2", "params": {"mass": 1}})");
  EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Runner, ToleranceOverrideChangesGate) {
  auto cfg = parse(R"({"system": "free-nbody", "params": {"n": 3}, "tolerances": {"sum-q": 1e-30}})");
  const auto rep = run(cfg).report;
  const auto it = std::find_if(rep.checks.begin(), rep.checks.end(), [](const auto& c) { return c.name == "sum-q"; });
  ASSERT_NE(it, rep.checks.end());
  EXPECT_EQ(it->gate, 1e-30);
}

TEST(Runner, ReportsAreDeterministic) {
  auto cfg = parse(R"({"system": "sv2", "seed": 3, "integrator": {"method": "rk4", "step": 0.01, "sigma_end": 2}})");
  EXPECT_EQ(run(cfg).report.to_json().dump(), run(cfg).report.to_json().dump());
}

TEST(Runner, EveryShippedSystemPassesByDefault) {
  for (const char* sys : {"free-nbody", "pn2", "sv2", "coulomb-scalar"}) {
    ExperimentConfig cfg;
    cfg.system = sys;
    const auto rep = run(cfg).report;
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << sys << " " << c.name << " " << c.measured;
  }
}
