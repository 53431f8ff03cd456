// Acceptance suite: one PASS/FAIL line per criterion, followed by indented diagnostics.
// Exit status is the number of failed criteria.

#include "aggregame/cli.hpp"
#include "aggregame/io.hpp"
#include "aggregame/numerics.hpp"
#include "aggregame/predictor.hpp"
#include "aggregame/riccati.hpp"
#include "aggregame/scenario.hpp"
#include "aggregame/simulator.hpp"
#include "aggregame/value.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace aggregame;
namespace fs = std::filesystem;

namespace {

constexpr double kRiccatiRelTol = 1e-8;
constexpr double kRiccatiSeconds = 1.0;
constexpr double kBetaResidualTol = 1e-6;
constexpr double kBetaHalvingRatio = 3.5;
constexpr double kBetaStepsPerUnitTime = 400.0;
constexpr double kFeasibilityTol = 1e-10;
constexpr double kPredictorTol = 1e-6;
constexpr double kVarianceRelTol = 0.05;
constexpr double kVarianceSeconds = 120.0;
constexpr double kCostSigmas = 3.0;
constexpr double kNashSigmas = 3.0;
constexpr double kRefinementFraction = 0.05;
constexpr int kReplications = 10000;

ScenarioParams headline(int n_agents, double dt_obs) {
  ScenarioParams p;
  p.a = 1.0;
  p.b = 1.0;
  p.sigma = 1.0;
  p.q = 1.0;
  p.r = 1.0;
  p.h = 0.0;
  p.gamma = 0.8;
  p.T = 20.0;
  p.dt_obs = dt_obs;
  p.n_agents = n_agents;
  return validate(p);
}

int spi_for(double dt_obs, double steps_per_unit) {
  return std::max(2, static_cast<int>(std::lround(steps_per_unit * dt_obs)));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> notes;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

// ---------------------------------------------------------------------------

Outcome riccati_oracle() {
  ScenarioParams p;
  p.a = 0.0;
  p.b = p.r = p.q = 1.0;
  p.h = 0.0;
  p.T = 2.0;
  p.dt_obs = 1.0;
  const auto start = std::chrono::steady_clock::now();
  const Eigen::VectorXd sol = solve_p(validate(p), TimeGrid(p, 200));
  const double elapsed = seconds_since(start);
  const double exact = std::tanh(2.0);
  const double rel = std::abs(sol(0) - exact) / exact;
  return {rel <= kRiccatiRelTol && elapsed < kRiccatiSeconds,
          fmt("p(0) = %.12f vs tanh(2) = %.12f, rel err %.2e (tol %.0e), %.3f s", sol(0), exact, rel, kRiccatiRelTol,
              elapsed),
          {}};
}

Outcome beta_identity() {
  const ScenarioParams p = headline(10, 2.0);
  const auto residual = [&](double steps_per_unit) {
    const TimeGrid grid(p, spi_for(p.dt_obs, steps_per_unit));
    const RiccatiTables t = build_tables(p, grid);
    return beta_residual(p, grid, t.p, t.alpha, Stencil::five_point);
  };
  const double coarse = residual(kBetaStepsPerUnitTime);
  const double fine = residual(2.0 * kBetaStepsPerUnitTime);
  const double ratio = coarse / fine;
  return {coarse <= kBetaResidualTol && ratio >= kBetaHalvingRatio,
          fmt("residual %.3e at 400/unit (tol %.0e), %.3e at 800/unit, ratio %.2f (need >= %.1f)", coarse,
              kBetaResidualTol, fine, ratio, kBetaHalvingRatio),
          {}};
}

Outcome feasibility_classifier() {
  const FeasibilityReport bounded = feasibility_check(headline(10, 2.0));
  ScenarioParams escape;
  escape.a = 0.0;
  escape.sigma = 1.0;
  escape.gamma = 3.0;
  escape.T = 2.0;
  escape.dt_obs = 1.0;
  escape.n_agents = 10;
  const FeasibilityReport esc = feasibility_check(validate(escape));
  const double expected = 2.0 - std::numbers::pi / (2.0 * std::sqrt(2.0));
  const bool e_ok = std::abs(bounded.e_value - (-1.2)) <= kFeasibilityTol && bounded.kind == FeasibilityCase::bounded;
  const bool t_ok = esc.t_esc.has_value() && std::abs(*esc.t_esc - expected) <= kFeasibilityTol &&
                    !esc.feasible_on_horizon;
  return {e_ok && t_ok,
          fmt("E = %.15g (%s); t_esc = %.15g vs %.15g", bounded.e_value, bounded.describe().c_str(),
              esc.t_esc.value_or(NAN), expected),
          {}};
}

Outcome predictor_consistency() {
  ScenarioParams p = headline(10, 2.0);
  p.sigma = 0.0;
  const RiccatiTables t = build_tables(p, TimeGrid(p, 200));
  SimulationConfig c;
  c.mode = ObservationMode::delayed;
  c.n_replications = 1;
  c.prior_mode = PriorMode::known_mean;
  c.initial_law = InitialLaw::point_mass(1.0);
  const PopulationTrajectory run = simulate_replication(t, p, c, 0);
  const double worst = (run.empirical_mean - run.predictor_path).cwiseAbs().maxCoeff();
  return {worst <= kPredictorTol, fmt("max |mean - predictor| = %.3e (tol %.0e)", worst, kPredictorTol), {}};
}

Outcome prediction_error_statistics() {
  const ScenarioParams p = headline(100, 1.0);
  const auto start = std::chrono::steady_clock::now();
  const RiccatiTables t = build_tables(p, TimeGrid(p, 100));
  SimulationConfig c;
  c.mode = ObservationMode::delayed;
  c.n_replications = kReplications;
  c.seed = 505;
  c.collect_reveal_errors = true;
  const BatchResult r = run_batch(t, p, c);
  const double elapsed = seconds_since(start);
  double worst = 0.0;
  int worst_j = 0;
  for (int j = 1; j <= t.grid.interval_count(); ++j) {
    const Eigen::VectorXd col = r.reveal_errors.col(j - 1);
    const SampleStats s = sample_stats(std::vector<double>(col.data(), col.data() + col.size()));
    const double exact = prediction_error_variance(t, p, j, t.grid.interval_start(j));
    const double rel = std::abs(s.variance - exact) / exact;
    if (rel > worst) {
      worst = rel;
      worst_j = j;
    }
  }
  return {worst <= kVarianceRelTol && elapsed < kVarianceSeconds,
          fmt("%d reveals, worst rel err %.2f%% at j = %d (tol %.0f%%), %.1f s", t.grid.interval_count(), 100 * worst,
              worst_j, 100 * kVarianceRelTol, elapsed),
          {}};
}

Outcome cost_agreement() {
  Outcome out{true, {}, {}};
  std::ostringstream summary;
  for (int n : {10, 100}) {
    const ScenarioParams p = headline(n, 2.0);
    const RiccatiTables t = build_tables(p, TimeGrid(p, 200));
    const InitialLaw law = InitialLaw::point_mass(1.0);
    const CostReport report =
        analytic_report(t, p, PriorMode::known_mean, InitialMoments::from_law(law, n, PriorMode::known_mean));
    SimulationConfig c;
    c.mode = ObservationMode::delayed;
    c.n_replications = kReplications;
    c.seed = 606;
    c.prior_mode = PriorMode::known_mean;
    c.initial_law = law;
    const BatchResult r = run_batch(t, p, c);
    const double z = (r.cost.mean - report.v_original) / r.cost.standard_error;
    const bool ok = std::abs(z) <= kCostSigmas;
    out.pass = out.pass && ok;
    summary << fmt("N=%d: empirical %.4f +- %.4f vs v_original %.4f (z = %+.2f) %s; ", n, r.cost.mean,
                   r.cost.standard_error, report.v_original, z, ok ? "ok" : "off");
    const double za = (r.adjusted_cost.mean - report.v_adjusted) / r.adjusted_cost.standard_error;
    out.notes.push_back(fmt("N=%d: adjusted cost %.4f +- %.4f vs v_adjusted %.4f (z = %+.2f)", n,
                            r.adjusted_cost.mean, r.adjusted_cost.standard_error, report.v_adjusted, za));
  }
  out.summary = summary.str();
  if (!out.pass) {
    out.notes.push_back(
        "the value recursion treats the mean as exogenous to agent 0; agent 0's own 1/N share of the mean "
        "is absent from it, which is visible at N=10 and fades by N=100");
  }
  return out;
}

Outcome nash_property() {
  const ScenarioParams p = headline(10, 2.0);
  const RiccatiTables t = build_tables(p, TimeGrid(p, 100));
  SimulationConfig c;
  c.mode = ObservationMode::delayed;
  c.n_replications = kReplications;
  c.seed = 707;
  c.prior_mode = PriorMode::known_mean;
  c.initial_law = InitialLaw::point_mass(1.0);
  const std::vector<double> eps = {-0.2, -0.1, 0.0, 0.1, 0.2};
  const std::vector<DeviationPoint> curve = nash_deviation_test(t, p, c, eps);
  Outcome out{true, {}, {}};
  std::size_t argmin = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].cost.mean < curve[argmin].cost.mean) argmin = i;
    out.notes.push_back(fmt("eps = %+.1f: J = %.4f, J - J(0) = %+.4f +- %.4f, adjusted gap %+.4f +- %.4f",
                            curve[i].epsilon, curve[i].cost.mean, curve[i].gap.mean, curve[i].gap.standard_error,
                            curve[i].adjusted_gap.mean, curve[i].adjusted_gap.standard_error));
  }
  const bool min_at_zero = curve[argmin].epsilon == 0.0;
  bool gaps_ok = true;
  for (std::size_t i : {std::size_t{1}, std::size_t{3}}) {
    gaps_ok = gaps_ok && curve[i].gap.mean > kNashSigmas * curve[i].gap.standard_error;
  }
  out.pass = min_at_zero && gaps_ok;
  out.summary = fmt("argmin eps = %+.1f; gap(-0.1) = %+.4f +- %.4f, gap(+0.1) = %+.4f +- %.4f", curve[argmin].epsilon,
                    curve[1].gap.mean, curve[1].gap.standard_error, curve[3].gap.mean, curve[3].gap.standard_error);
  if (!out.pass) {
    out.notes.push_back(
        "the equilibrium gain ignores that agent 0's state feeds the mean it tracks; at N=10 a slightly "
        "softer gain is a profitable unilateral deviation of order 1/N");
  }
  return out;
}

Outcome cost_ordering() {
  Outcome out{true, {}, {}};
  std::vector<double> delayed_gaps, latency_gaps;
  std::ostringstream summary;
  for (int n : {10, 100, 1000}) {
    const ScenarioParams p = headline(n, 2.0);
    const int spi = n >= 1000 ? 50 : 100;
    const int reps = n >= 1000 ? 2000 : kReplications;
    const RiccatiTables t = build_tables(p, TimeGrid(p, spi));
    std::vector<BatchResult> runs;
    for (ObservationMode mode : {ObservationMode::continuous, ObservationMode::zero_latency, ObservationMode::delayed}) {
      SimulationConfig c;
      c.mode = mode;
      c.n_replications = reps;
      c.seed = 808;
      c.prior_mode = PriorMode::known_mean;
      c.initial_law = InitialLaw::point_mass(1.0);
      runs.push_back(run_batch(t, p, c));
    }
    const auto paired = [&](const BatchResult& x) {
      std::vector<double> d(x.costs.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = x.costs[i] - runs[0].costs[i];
      return sample_stats(d);
    };
    const SampleStats zl = paired(runs[1]), dl = paired(runs[2]);
    latency_gaps.push_back(zl.mean);
    delayed_gaps.push_back(dl.mean);
    out.notes.push_back(fmt("N=%d (%d reps): continuous %.4f, zero_latency %.4f, delayed %.4f; paired gaps %.5f +- "
                            "%.5f, %.5f +- %.5f",
                            n, reps, runs[0].cost.mean, runs[1].cost.mean, runs[2].cost.mean, zl.mean,
                            zl.standard_error, dl.mean, dl.standard_error));
    if (n == 10) {
      const bool ordered = runs[0].cost.mean <= runs[1].cost.mean && runs[1].cost.mean <= runs[2].cost.mean;
      out.pass = out.pass && ordered;
      summary << (ordered ? "ordering holds at N=10; " : "ordering broken at N=10; ");
    }
  }
  bool shrinking = true;
  for (std::size_t i = 1; i < delayed_gaps.size(); ++i) {
    shrinking = shrinking && delayed_gaps[i] < delayed_gaps[i - 1] && latency_gaps[i] < latency_gaps[i - 1];
  }
  out.pass = out.pass && shrinking;
  summary << (shrinking ? "gaps shrink over N" : "gaps do not shrink monotonically");
  out.summary = summary.str();
  return out;
}

Outcome delay_penalty_shape() {
  const auto delta_j = [](double dt, PriorMode prior) {
    const ScenarioParams p = headline(100, dt);
    const RiccatiTables t = build_tables(p, TimeGrid(p, spi_for(dt, 200.0)));
    return analytic_report(t, p, prior, InitialMoments::from_law(InitialLaw::point_mass(1.0), 100, prior));
  };
  Outcome out{true, {}, {}};
  std::vector<double> values;
  for (double dt : {0.2, 0.5, 1.0, 2.0}) {
    const CostReport r = delta_j(dt, PriorMode::known_mean);
    values.push_back(r.delta_j);
    out.notes.push_back(fmt("dt = %.2f: delta_j = %.6f, delta_v = %.6f", dt, r.delta_j, r.delta_v));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < values.size(); ++i) monotone = monotone && values[i] >= values[i - 1];
  const CostReport fine = delta_j(0.01, PriorMode::known_mean);
  const bool consistent = fine.delta_j <= kRefinementFraction * values.back();
  out.notes.push_back(fmt("dt = 0.01: delta_j = %.6f, delta_v = %.6f", fine.delta_j, fine.delta_v));
  {
    const ScenarioParams p = headline(100, 0.01);
    const RiccatiTables t = build_tables(p, TimeGrid(p, spi_for(0.01, 200.0)));
    const ValueCoefficients c = backward_psi_gamma(t, p);
    double reveals = 0.0;
    for (double v : c.reveal_term) reveals += v;
    const Eigen::VectorXd psi = continuous_psi(t, p);
    const double mean_noise =
        p.sigma * p.sigma / p.n_agents * numerics::trapezoid(t.grid.times(), psi, 0, t.grid.last_node());
    out.notes.push_back(fmt("dt = 0.01: summed reveal terms %.6f; (sigma^2/N) int psi_c dt = %.6f; "
                            "delta_j less that term = %.6f",
                            reveals, mean_noise, fine.delta_j - mean_noise));
  }
  out.pass = monotone && consistent;
  out.summary = fmt("delta_j %s over dt; delta_j(0.01) / delta_j(2) = %.3f (need <= %.2f)",
                    monotone ? "nondecreasing" : "not monotone", fine.delta_j / values.back(), kRefinementFraction);
  if (!out.pass) {
    out.notes.push_back(
        "the continuous baseline carries no term for the quadratic variation of the empirical mean, "
        "while the delayed value accrues it through the reveal terms; delta_j therefore levels off near "
        "(sigma^2/N) int psi_c dt instead of vanishing, and the dt-dependence left over is the small delay "
        "penalty delta_v, itself monotone and vanishing");
  }
  return out;
}

Outcome exact_scaling() {
  Outcome out{true, {}, {}};
  const ScenarioParams base = headline(10, 2.0);
  const RiccatiTables t = build_tables(base, TimeGrid(base, 50));
  const auto zero = InitialMoments::point(0.0, 0.0, 0.0);
  std::ostringstream summary;
  for (int n : {10, 37, 250}) {
    ScenarioParams p1 = base, p2 = base;
    p1.n_agents = n;
    p2.n_agents = 2 * n;
    const double j1 = analytic_report(t, p1, PriorMode::zero, zero).delta_j;
    const double j2 = analytic_report(t, p2, PriorMode::zero, zero).delta_j;
    const bool exact = j2 == 0.5 * j1 && j1 > 0.0;
    out.pass = out.pass && exact;
    summary << fmt("N=%d->%d: %.17g / %.17g %s; ", n, 2 * n, j1, j2, exact ? "exact" : "inexact");
  }
  out.summary = summary.str();
  return out;
}

Outcome sweep_determinism() {
  const fs::path root = fs::temp_directory_path() / "aggregame_acceptance_sweep";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path scenario = root / "scenario.txt";
  io::write_file_atomic(scenario,
                        "a=1\nb=1\nsigma=1\nq=1\nr=1\nh=0\ngamma=0.8\nT=20\ndt_obs=2\nn_agents=10\n"
                        "steps_per_interval=50\nn_replications=200\nseed=1111\nprior_mode=known_mean\n");
  const auto sweep = [&](const std::string& dir) {
    const std::vector<std::string> args = {"aggregame",   "sweep",   "--scenario",    scenario.string(),
                                           "--out",       (root / dir).string(), "--dt-list", "0.5,1,2",
                                           "--n-list",    "10,100",  "--seed",        "42"};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  const int first = sweep("a"), second = sweep("b");
  bool same = first == 0 && second == 0;
  std::size_t bytes = 0;
  for (const char* name : {"cost_comparison.csv", "delay_penalty.csv"}) {
    if (!same) break;
    const std::string x = io::read_file(root / "a" / name), y = io::read_file(root / "b" / name);
    same = same && x == y && !x.empty();
    bytes += x.size();
  }
  fs::remove_all(root);
  return {same, fmt("exit codes %d/%d, %zu bytes compared, %s", first, second, bytes, same ? "identical" : "differ"),
          {}};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"riccati closed-form oracle", riccati_oracle},
      {"beta cross-identity", beta_identity},
      {"feasibility classifier", feasibility_classifier},
      {"predictor consistency", predictor_consistency},
      {"prediction-error statistics", prediction_error_statistics},
      {"analytic/empirical cost agreement", cost_agreement},
      {"nash property", nash_property},
      {"information-pattern cost ordering", cost_ordering},
      {"delay penalty shape in dt", delay_penalty_shape},
      {"exact 1/N scaling", exact_scaling},
      {"sweep determinism", sweep_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), {}};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.summary.c_str(),
                seconds_since(start));
    for (const auto& note : o.notes) std::printf("       %s\n", note.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
