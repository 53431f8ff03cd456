#include "aggregame/cli.hpp"

#include "aggregame/error.hpp"
#include "aggregame/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <ostream>
#include <sstream>

namespace aggregame::cli {

namespace fs = std::filesystem;
using io::format_number;

Prepared prepare(const Scenario& scenario) {
  Scenario checked = scenario;
  checked.params = validate(scenario.params);
  if (checked.steps_per_interval < 2) throw ValidationError("steps_per_interval must be at least 2");
  if (checked.n_replications < 1) throw ValidationError("n_replications must be at least 1");
  const FeasibilityReport feasibility = feasibility_check(checked.params);
  if (!feasibility.feasible_on_horizon) throw InfeasibleError("infeasible horizon: " + feasibility.describe());
  const TimeGrid grid(checked.params, checked.steps_per_interval);
  RiccatiTables tables = build_tables(checked.params, grid);
  return Prepared{std::move(checked), feasibility, std::move(tables)};
}

std::string feasibility_json(const FeasibilityReport& report) {
  nlohmann::ordered_json j;
  j["e_value"] = report.e_value;
  j["w_terminal"] = report.w_terminal;
  j["case"] = report.kind == FeasibilityCase::bounded ? "bounded" : "escape";
  j["t_esc"] = report.t_esc ? nlohmann::ordered_json(*report.t_esc) : nlohmann::ordered_json(nullptr);
  j["feasible_on_horizon"] = report.feasible_on_horizon;
  j["e_nonpositive"] = report.e_nonpositive;
  return j.dump(2) + "\n";
}

namespace {

std::string number_tag(double value) {
  std::string s = format_number(value);
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

const char* kParamHeader =
    "a,b,sigma,q,r,h,gamma,T,dt_obs,n_agents,steps_per_interval,n_replications,seed,prior_mode,init_mean,init_var,";

std::string param_tuple(const Scenario& s, const InitialLaw& law) {
  const auto& p = s.params;
  std::ostringstream out;
  out << format_number(p.a) << ',' << format_number(p.b) << ',' << format_number(p.sigma) << ','
      << format_number(p.q) << ',' << format_number(p.r) << ',' << format_number(p.h) << ','
      << format_number(p.gamma) << ',' << format_number(p.T) << ',' << format_number(p.dt_obs) << ','
      << p.n_agents << ',' << s.steps_per_interval << ',' << s.n_replications << ',' << s.seed << ','
      << to_string(s.prior_mode) << ',' << format_number(law.mean) << ',' << format_number(law.variance) << ',';
  return out.str();
}

SimulationConfig simulation_config(const Scenario& s, const InitialLaw& law, ObservationMode mode) {
  SimulationConfig config;
  config.mode = mode;
  config.n_replications = s.n_replications;
  config.seed = s.seed;
  config.initial_law = law;
  config.prior_mode = s.prior_mode;
  return config;
}

std::string csv_field(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '"') c = ' ';
  }
  return text;
}

}  // namespace

void cmd_solve(const Scenario& scenario, const InitialLaw& law, const fs::path& out_dir, std::ostream& log) {
  const ScenarioParams params = validate(scenario.params);
  const FeasibilityReport feasibility = feasibility_check(params);
  fs::create_directories(out_dir);
  io::write_file_atomic(out_dir / "feasibility.json", feasibility_json(feasibility));
  log << feasibility.describe() << '\n';
  const Prepared prepared = prepare(scenario);
  io::write_file_atomic(out_dir / "riccati.csv", riccati_csv(prepared.tables));
  const CostReport report = analytic_report(prepared.tables, prepared.scenario.params, prepared.scenario.prior_mode,
                                            InitialMoments::from_law(law, params.n_agents, scenario.prior_mode));
  io::write_file_atomic(out_dir / "cost_report.json", report.to_json());
  log << "v_original = " << format_number(report.v_original) << ", v_continuous = "
      << format_number(report.v_continuous) << ", delta_j = " << format_number(report.delta_j) << '\n';
}

void cmd_sweep(const SweepSpec& spec, std::ostream& log) {
  std::vector<Scenario> points;
  const std::vector<double> dts = spec.dt_list.empty() ? std::vector<double>{spec.base.params.dt_obs} : spec.dt_list;
  const std::vector<int> ns = spec.n_list.empty() ? std::vector<int>{spec.base.params.n_agents} : spec.n_list;
  for (double dt : dts) {
    for (int n : ns) {
      Scenario s = spec.base;
      s.params.dt_obs = dt;
      s.params.n_agents = n;
      s.params = validate(s.params);
      const FeasibilityReport f = feasibility_check(s.params);
      if (!f.feasible_on_horizon) {
        throw InfeasibleError("sweep point dt_obs=" + format_number(dt) + ", n_agents=" + std::to_string(n) +
                              ": " + f.describe());
      }
      points.push_back(std::move(s));
    }
  }

  fs::create_directories(spec.out_dir / "points");
  std::ostringstream costs, penalties;
  costs << kParamHeader << "mode,analytic_cost,empirical_mean,standard_error,delta_j,status\n";
  penalties << kParamHeader << "v_adjusted,delta_v,v_original,v_continuous,delta_j,first_interval_excluded,status\n";

  for (const Scenario& s : points) {
    const std::string tuple = param_tuple(s, spec.initial_law);
    const std::string tag = "dt" + number_tag(s.params.dt_obs) + "_N" + std::to_string(s.params.n_agents);
    std::optional<Prepared> prepared;
    std::optional<CostReport> report;
    try {
      prepared.emplace(prepare(s));
      report = analytic_report(prepared->tables, s.params, s.prior_mode,
                               InitialMoments::from_law(spec.initial_law, s.params.n_agents, s.prior_mode));
      io::write_file_atomic(spec.out_dir / "points" / (tag + ".json"), report->to_json());
      penalties << tuple << format_number(report->v_adjusted) << ',' << format_number(report->delta_v) << ','
                << format_number(report->v_original) << ',' << format_number(report->v_continuous) << ','
                << format_number(report->delta_j) << ',' << (s.prior_mode == PriorMode::zero ? 1 : 0) << ",ok\n";
    } catch (const Error& e) {
      penalties << tuple << ",,,,,," << csv_field(e.what()) << '\n';
      for (ObservationMode mode : s.modes) costs << tuple << to_string(mode) << ",,,,," << csv_field(e.what()) << '\n';
      log << tag << ": " << e.what() << '\n';
      continue;
    }
    for (ObservationMode mode : s.modes) {
      costs << tuple << to_string(mode) << ',';
      try {
        const BatchResult batch = run_batch(prepared->tables, s.params, simulation_config(s, spec.initial_law, mode));
        std::string analytic;
        if (mode == ObservationMode::delayed) analytic = format_number(report->v_original);
        if (mode == ObservationMode::continuous) analytic = format_number(report->v_continuous);
        costs << analytic << ',' << format_number(batch.cost.mean) << ',' << format_number(batch.cost.standard_error)
              << ',' << format_number(report->delta_j) << ",ok\n";
        log << tag << ' ' << to_string(mode) << ": mean cost " << format_number(batch.cost.mean) << " +- "
            << format_number(batch.cost.standard_error) << '\n';
      } catch (const Error& e) {
        costs << ",,," << format_number(report->delta_j) << ',' << csv_field(e.what()) << '\n';
        log << tag << ' ' << to_string(mode) << ": " << e.what() << '\n';
      }
    }
  }
  io::write_file_atomic(spec.out_dir / "cost_comparison.csv", costs.str());
  io::write_file_atomic(spec.out_dir / "delay_penalty.csv", penalties.str());
}

void cmd_trace(const Scenario& scenario, const InitialLaw& law, const std::vector<double>& dt_list, int max_agents,
               const fs::path& out_dir, std::ostream& log) {
  const std::vector<double> dts = dt_list.empty() ? std::vector<double>{scenario.params.dt_obs} : dt_list;
  fs::create_directories(out_dir);
  for (double dt : dts) {
    Scenario s = scenario;
    s.params.dt_obs = dt;
    const Prepared prepared = prepare(s);
    for (ObservationMode mode : s.modes) {
      SimulationConfig config = simulation_config(prepared.scenario, law, mode);
      PopulationTrajectory run = simulate_replication(prepared.tables, prepared.scenario.params, config, 0);
      const std::string tuple = param_tuple(prepared.scenario, law) + std::string(to_string(mode)) + ',';
      const std::string header = std::string(kParamHeader) + "mode,";
      const std::string stem = std::string(to_string(mode)) + "_dt" + number_tag(dt);

      std::vector<std::pair<std::uint64_t, PopulationTrajectory>> runs;
      runs.emplace_back(0, std::move(run));
      io::write_file_atomic(out_dir / ("trace_" + stem + ".csv"), trajectory_csv(runs, max_agents, header, tuple));

      std::ostringstream reveals;
      reveals << header << "replication,reveal_time,observed_time,value\n";
      for (const RevealEvent& e : runs.front().second.reveal_log) {
        reveals << tuple << 0 << ',' << format_number(e.reveal_time) << ',' << format_number(e.observed_time) << ','
                << format_number(e.value) << '\n';
      }
      io::write_file_atomic(out_dir / ("reveals_" + stem + ".csv"), reveals.str());
      log << "trace " << stem << ": " << runs.front().second.reveal_log.size() << " reveals\n";
    }
  }
}

void cmd_deviate(const Scenario& scenario, const InitialLaw& law, const std::vector<double>& epsilons,
                 const fs::path& out_dir, std::ostream& log) {
  const Prepared prepared = prepare(scenario);
  const std::vector<double> eps = epsilons.empty() ? std::vector<double>{-0.2, -0.1, 0.0, 0.1, 0.2} : epsilons;
  fs::create_directories(out_dir);
  std::ostringstream out;
  out << kParamHeader << "mode,epsilon,mean_cost,standard_error,gap,gap_standard_error,adjusted_mean_cost,"
      << "adjusted_gap,adjusted_gap_standard_error\n";
  for (ObservationMode mode : prepared.scenario.modes) {
    const auto curve = nash_deviation_test(prepared.tables, prepared.scenario.params,
                                           simulation_config(prepared.scenario, law, mode), eps);
    for (const DeviationPoint& point : curve) {
      out << param_tuple(prepared.scenario, law) << to_string(mode) << ',' << format_number(point.epsilon) << ','
          << format_number(point.cost.mean) << ',' << format_number(point.cost.standard_error) << ','
          << format_number(point.gap.mean) << ',' << format_number(point.gap.standard_error) << ','
          << format_number(point.adjusted_cost.mean) << ',' << format_number(point.adjusted_gap.mean) << ','
          << format_number(point.adjusted_gap.standard_error) << '\n';
      log << to_string(mode) << " eps=" << format_number(point.epsilon) << ": J-J0 = " << format_number(point.gap.mean)
          << " +- " << format_number(point.gap.standard_error) << '\n';
    }
  }
  io::write_file_atomic(out_dir / "deviation.csv", out.str());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibrium solver and Monte-Carlo harness for aggregative LQG games with delayed mean reveals"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<int> replications;
  std::vector<double> dt_list, eps_list;
  std::vector<int> n_list;
  double init_mean = 0.0, init_var = 1.0;
  int agents = 5;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_path, "scenario file (key=value)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "root seed override");
    sub->add_option("--mode", mode, "delayed, zero_latency, continuous or all");
    sub->add_option("--replications", replications, "replication count override");
    sub->add_option("--init-mean", init_mean, "mean of the i.i.d. initial states");
    sub->add_option("--init-var", init_var, "variance of the i.i.d. initial states (0 = point mass)");
  };
  CLI::App* solve = app.add_subcommand("solve", "backward pass, feasibility and analytic cost report");
  CLI::App* sweep = app.add_subcommand("sweep", "analytic and Monte-Carlo costs over dt and N");
  CLI::App* trace = app.add_subcommand("trace", "one replication per dt: mean, predictor and reveals");
  CLI::App* deviate = app.add_subcommand("deviate", "unilateral gain deviations of agent 0");
  for (CLI::App* sub : {solve, sweep, trace, deviate}) common(sub);
  sweep->add_option("--dt-list", dt_list, "observation periods")->delimiter(',');
  sweep->add_option("--n-list", n_list, "population sizes")->delimiter(',');
  trace->add_option("--dt-list", dt_list, "observation periods")->delimiter(',');
  trace->add_option("--agents", agents, "agent paths to export per trace")->check(CLI::NonNegativeNumber);
  deviate->add_option("--eps-list", eps_list, "gain perturbations")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::validation;
  }

  try {
    Scenario scenario = load_scenario(scenario_path);
    if (seed) scenario.seed = *seed;
    if (mode) scenario.modes = parse_mode_list(*mode);
    if (replications) scenario.n_replications = *replications;
    if (init_var < 0.0) throw ValidationError("init-var must be nonnegative");
    const InitialLaw law{init_mean, init_var};
    const fs::path dir(out_dir);
    if (solve->parsed()) cmd_solve(scenario, law, dir, out);
    if (sweep->parsed()) cmd_sweep(SweepSpec{scenario, dt_list, n_list, law, dir}, out);
    if (trace->parsed()) cmd_trace(scenario, law, dt_list, agents, dir, out);
    if (deviate->parsed()) cmd_deviate(scenario, law, eps_list, dir, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::validation;
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::infeasible;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::numeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return ExitCode::ok;
}

}  // namespace aggregame::cli
