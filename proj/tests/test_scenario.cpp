#include "aggregame/error.hpp"
#include "aggregame/numerics.hpp"
#include "aggregame/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>

using namespace aggregame;

namespace {

ScenarioParams headline() {
  ScenarioParams p;
  p.a = 1;
  p.b = 1;
  p.sigma = 1;
  p.q = 1;
  p.r = 1;
  p.h = 0;
  p.gamma = 0.8;
  p.T = 20;
  p.dt_obs = 2;
  p.n_agents = 10;
  return p;
}

std::string full_file() {
  return "a=1\nb=1\nsigma=1\nq=1\nr=1\nh=0\ngamma=0.8\nT=20\ndt_obs=2\nn_agents=10\n";
}

std::string validation_message(const ScenarioParams& p) {
  try {
    validate(p);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

// Backward RK4 on w' = w^2 + E from w(T); returns the backward duration at which |w| passes 1e8.
double blow_up_duration(double E, double w_terminal, double step) {
  double w = w_terminal;
  double elapsed = 0.0;
  const auto field = [E](double, double y) { return -(y * y + E); };
  while (std::abs(w) < 1e8 && elapsed < 100.0) {
    w = numerics::rk4_step(field, 0.0, w, step);
    elapsed += step;
  }
  return elapsed;
}

}  // namespace

TEST(Validate, AcceptsHeadlineParameters) { EXPECT_NO_THROW(validate(headline())); }

TEST(Validate, NamesTheOffendingField) {
  auto p = headline();
  p.b = 0;
  EXPECT_EQ(validation_message(p), "b must be nonzero");
  p = headline();
  p.dt_obs = 25;
  EXPECT_EQ(validation_message(p), "dt_obs exceeds T");
  p = headline();
  p.q = 0;
  EXPECT_NE(validation_message(p).find("q"), std::string::npos);
  p = headline();
  p.r = -1;
  EXPECT_NE(validation_message(p).find("r"), std::string::npos);
  p = headline();
  p.n_agents = 1;
  EXPECT_NE(validation_message(p).find("n_agents"), std::string::npos);
  p = headline();
  p.sigma = -0.1;
  EXPECT_NE(validation_message(p).find("sigma"), std::string::npos);
  p = headline();
  p.h = -1;
  EXPECT_NE(validation_message(p).find("h"), std::string::npos);
  p = headline();
  p.T = 0;
  EXPECT_FALSE(validation_message(p).empty());
}

TEST(TimeGrid, ObservationTimesAreNodes) {
  auto p = headline();
  p.T = 7.5;
  const TimeGrid grid(p, 10);
  ASSERT_EQ(grid.interval_count(), 3);
  EXPECT_DOUBLE_EQ(grid.obs_times()[1], 2.0);
  for (int j = 0; j <= grid.interval_count(); ++j) {
    Eigen::Index k = -1;
    const double t = j < grid.interval_count() ? grid.obs_times()[static_cast<std::size_t>(j)] : 7.5;
    ASSERT_TRUE(grid.is_node(t, &k));
    EXPECT_EQ(k, grid.interval_start(j));
  }
  // Remainder interval [4, 7.5] gets proportionally more steps.
  EXPECT_EQ(grid.interval_end(2) - grid.interval_start(2), 18);
  EXPECT_DOUBLE_EQ(grid.horizon(), 7.5);
  EXPECT_EQ(grid.interval_of_node(grid.interval_start(1)), 1);
  EXPECT_EQ(grid.interval_of_node(grid.last_node()), 2);
  EXPECT_FALSE(grid.is_node(0.05));
}

TEST(TimeGrid, ExactMultipleKeepsAllIntervals) {
  auto p = headline();
  p.T = 1.0;
  p.dt_obs = 0.1;  // 1.0 / 0.1 is 9.999... in floating point
  const TimeGrid grid(p, 4);
  EXPECT_EQ(grid.interval_count(), 10);
  EXPECT_EQ(grid.node_count(), 41);
}

TEST(Feasibility, HeadlineIsBounded) {
  const auto f = feasibility_check(headline());
  EXPECT_NEAR(f.e_value, -1.2, 1e-15);
  EXPECT_EQ(f.kind, FeasibilityCase::bounded);
  EXPECT_TRUE(f.feasible_on_horizon);
  EXPECT_FALSE(f.t_esc.has_value());
}

TEST(Feasibility, EscapeScenarioClosedForm) {
  ScenarioParams p;
  p.a = 0;
  p.gamma = 3;
  p.h = 0;
  p.T = 2;
  p.dt_obs = 1;
  const auto f = feasibility_check(p);
  EXPECT_DOUBLE_EQ(f.e_value, 2.0);
  EXPECT_DOUBLE_EQ(f.w_terminal, 0.0);
  ASSERT_TRUE(f.t_esc.has_value());
  EXPECT_NEAR(*f.t_esc, 2.0 - std::numbers::pi / (2.0 * std::sqrt(2.0)), 1e-12);
  EXPECT_FALSE(f.feasible_on_horizon);
  EXPECT_EQ(f.kind, FeasibilityCase::escape);
}

TEST(Feasibility, UnitGammaIsBounded) {
  auto p = headline();
  p.gamma = 1;
  p.a = 0.7;
  const auto f = feasibility_check(p);
  EXPECT_NEAR(f.e_value, -0.49, 1e-15);
  EXPECT_EQ(f.kind, FeasibilityCase::bounded);
}

TEST(Feasibility, EscapeTimeMatchesIntegratedBlowUp) {
  for (double gamma : {2.0, 3.0, 5.0}) {
    for (double h : {0.0, 0.5}) {
      ScenarioParams p;
      p.a = 0.3;
      p.gamma = gamma;
      p.h = h;
      p.T = 10;
      p.dt_obs = 1;
      const auto f = feasibility_check(p);
      ASSERT_TRUE(f.t_esc.has_value());
      const double duration = blow_up_duration(f.e_value, f.w_terminal, 1e-5);
      EXPECT_NEAR(p.T - *f.t_esc, duration, 1e-3) << "gamma=" << gamma << " h=" << h;
    }
  }
}

TEST(Feasibility, NegativeEnergyCanStillEscape) {
  // E < 0 but w(T) below the repelling root -sqrt(-E): finite escape backward in time.
  ScenarioParams p;
  p.a = 1;
  p.gamma = 1.5;
  p.h = 4;
  p.T = 10;
  p.dt_obs = 1;
  const auto f = feasibility_check(p);
  EXPECT_LT(f.e_value, 0.0);
  EXPECT_TRUE(f.e_nonpositive);
  ASSERT_EQ(f.kind, FeasibilityCase::escape);
  EXPECT_NEAR(p.T - *f.t_esc, blow_up_duration(f.e_value, f.w_terminal, 1e-5), 1e-3);
}

TEST(Feasibility, ThresholdOnGamma) {
  // Gamma at or below 1 + a^2 r / (b^2 q) gives E <= 0.
  for (double a : {0.0, 0.5, 1.0, 2.0}) {
    ScenarioParams p;
    p.a = a;
    p.h = 0;
    p.gamma = 1.0 + a * a;
    EXPECT_LE(feasibility_check(p).e_value, 1e-15);
    EXPECT_TRUE(feasibility_check(p).e_nonpositive);
    p.gamma = 0.2;
    EXPECT_TRUE(feasibility_check(p).e_nonpositive);
  }
}

TEST(Feasibility, EscapeTimeMonotoneInGamma) {
  ScenarioParams p;
  p.a = 0.2;
  p.h = 0.3;
  p.T = 5;
  double previous = -1e300;
  for (double gamma = 1.2; gamma <= 8.0; gamma += 0.2) {
    p.gamma = gamma;
    const auto f = feasibility_check(p);
    if (!f.t_esc) continue;
    EXPECT_GE(*f.t_esc, previous) << gamma;
    previous = *f.t_esc;
  }
}

TEST(Parser, ReadsAllKeys) {
  const std::string text = full_file() +
                           "# comment\n\nsteps_per_interval=50\nn_replications=12\nseed=99\nmode=zero_latency\n"
                           "prior_mode=known_mean\n";
  const Scenario s = parse_scenario(text);
  EXPECT_DOUBLE_EQ(s.params.gamma, 0.8);
  EXPECT_EQ(s.params.n_agents, 10);
  EXPECT_EQ(s.steps_per_interval, 50);
  EXPECT_EQ(s.n_replications, 12);
  EXPECT_EQ(s.seed, 99u);
  ASSERT_EQ(s.modes.size(), 1u);
  EXPECT_EQ(s.modes[0], ObservationMode::zero_latency);
  EXPECT_EQ(s.prior_mode, PriorMode::known_mean);
}

TEST(Parser, DefaultsForOptionalKeys) {
  const Scenario s = parse_scenario(full_file());
  EXPECT_EQ(s.steps_per_interval, 200);
  EXPECT_EQ(s.modes.size(), 3u);
  EXPECT_EQ(s.prior_mode, PriorMode::zero);
}

TEST(Parser, MissingKeyIsNamed) {
  std::string text = full_file();
  text.erase(text.find("gamma=0.8\n"), 10);
  try {
    parse_scenario(text);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "missing key: gamma");
  }
}

TEST(Parser, UnknownKeyNamesLineAndKey) {
  try {
    parse_scenario(full_file() + "eta=1\n");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 11"), std::string::npos) << msg;
    EXPECT_NE(msg.find("eta"), std::string::npos) << msg;
  }
}

TEST(Parser, RejectsMalformedInput) {
  EXPECT_THROW(parse_scenario(full_file() + "a=2\n"), ValidationError);
  EXPECT_THROW(parse_scenario("a=x\n"), ValidationError);
  EXPECT_THROW(parse_scenario(full_file() + "n_agents2\n"), ValidationError);
  EXPECT_THROW(parse_scenario(full_file() + "mode=sometimes\n"), ValidationError);
  EXPECT_THROW(parse_scenario(full_file() + "n_replications=1.5\n"), ValidationError);
}

TEST(Parser, FormatRoundTrips) {
  const Scenario s = parse_scenario(full_file() + "seed=123456789012345\nmode=continuous\n");
  const Scenario back = parse_scenario(format_scenario(s));
  EXPECT_EQ(format_scenario(back), format_scenario(s));
  EXPECT_EQ(back.seed, 123456789012345u);
  EXPECT_DOUBLE_EQ(back.params.gamma, 0.8);
}
