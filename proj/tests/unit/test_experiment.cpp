#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "wbis/config.hpp"
#include "wbis/experiment.hpp"

using namespace wbis;

TEST(FormatNumber, RoundTrips) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(Error(ErrorCode::ConfigError, "x")), kExitUsage);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::InvalidArgument, "x")), kExitUsage);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::NonPositiveDrift, "x")), kExitModelMath);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::NoRoot, "x")), kExitModelMath);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::EmptySample, "x")), kExitStatistical);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::BudgetExceeded, "x")), kExitStatistical);
}

TEST(Config, ParseFullDocument) {
  const auto cfg = parse_config(R"({
    "name": "demo",
    "model": {"type": "identical_pareto", "a": 5, "b": 0.4, "n_law": {"type": "uniform", "lo": 1, "hi": 3}},
    "estimator": {"variant": "independent_q", "n": 123, "t_grid": [1, 2]},
    "seeds": {"master_seed": 99},
    "output": {"csv": "out.csv"}
  })");
  EXPECT_EQ(cfg.name, "demo");
  const auto* p = cfg.model.get_if<model::IdenticalPareto>();
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->a, 5.0);
  EXPECT_EQ(p->n_law.mean(), 2.0);
  EXPECT_EQ(cfg.estimator.variant, EstimatorVariant::IndependentQ);
  EXPECT_EQ(cfg.estimator.n, 123u);
  EXPECT_EQ(cfg.estimator.t_grid, (std::vector<double>{1, 2}));
  EXPECT_EQ(cfg.master_seed, 99u);
  EXPECT_EQ(cfg.output.csv, "out.csv");
}

TEST(Config, PresetOverride) {
  const auto cfg = parse_config(R"({"preset": "mm1", "estimator": {"n": 50}})");
  EXPECT_EQ(cfg.estimator.n, 50u);
  EXPECT_EQ(cfg.estimator.t_grid.size(), 5u);
  EXPECT_NE(cfg.model.get_if<model::BranchingMM1>(), nullptr);
}

TEST(Config, Errors) {
  const auto expect_config_error = [](const std::string& text) {
    try {
      parse_config(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << text;
    }
  };
  expect_config_error("{");
  expect_config_error(R"({"model": {"type": "nope"}, "estimator": {"t_grid": [1]}})");
  expect_config_error(R"({"preset": "nope"})");
  expect_config_error(R"({"preset": "mm1", "estimator": {"t_grid": [2, 1]}})");
  expect_config_error(R"({"preset": "mm1", "estimator": {"variant": "bogus"}})");
  EXPECT_THROW(load_config("/nonexistent/wbis.json"), Error);
}

TEST(Config, Presets) {
  for (const auto& name : preset_names()) EXPECT_NO_THROW(validate(preset(name))) << name;
  EXPECT_EQ(preset("simplex").estimator.variant, EstimatorVariant::General);
}

TEST(IsGrid, CsvShape) {
  auto cfg = preset("nb_exp");
  cfg.estimator.n = 200;
  const TiltContext c = context_for(cfg);
  const auto rows = run_is_grid(cfg, c, 2);
  ASSERT_EQ(rows.size(), cfg.estimator.t_grid.size());
  EXPECT_FALSE(discard_threshold_exceeded(rows));
  std::ostringstream out;
  write_is_csv(out, rows);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kIsCsvHeader);
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(lines, static_cast<int>(rows.size()));
}

TEST(IsGrid, DiscardThreshold) {
  GridRow r;
  r.summary.n = 9990;
  r.summary.discarded = 10;
  EXPECT_FALSE(discard_threshold_exceeded({r}));
  r.summary.discarded = 11;
  EXPECT_TRUE(discard_threshold_exceeded({r}));
}

TEST(AlphaOverride, UsedByContext) {
  auto cfg = preset("nb_exp");
  cfg.alpha_override = 1.3;
  EXPECT_EQ(context_for(cfg).alpha, 1.3);
}

TEST(ReferenceTable, KnownNames) {
  EXPECT_EQ(reference_table("mm1").rows.size(), 5u);
  EXPECT_EQ(reference_table("simplex").rows.size(), 5u);
  EXPECT_THROW(reference_table("other"), Error);
  EXPECT_THROW(reproduce_table("other", 1, 1), Error);
}

TEST(SlopeFit, ExactLine) {
  const auto f = fit_log_slope({1, 2, 3, 4}, {std::exp(-1.0), std::exp(-2.0), 0.0, std::exp(-4.0)});
  EXPECT_EQ(f.points, 3u);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-12);
}

TEST(Validation, AllChecksPass) {
  for (const auto& c : run_validation(std::nullopt, 20240601, 0)) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
}
