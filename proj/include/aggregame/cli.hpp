#pragma once

#include "aggregame/riccati.hpp"
#include "aggregame/scenario.hpp"
#include "aggregame/simulator.hpp"
#include "aggregame/value.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aggregame::cli {

enum ExitCode : int { ok = 0, validation = 2, infeasible = 3, numeric = 4 };

/// A validated, feasible scenario with its backward pass done.
struct Prepared {
  Scenario scenario;
  FeasibilityReport feasibility;
  RiccatiTables tables;
};

/// Validates, checks feasibility (InfeasibleError when it fails) and solves.
Prepared prepare(const Scenario& scenario);

std::string feasibility_json(const FeasibilityReport& report);

struct SweepSpec {
  Scenario base;
  std::vector<double> dt_list;
  std::vector<int> n_list;
  InitialLaw initial_law;
  std::filesystem::path out_dir;
};

/// Writes riccati.csv, feasibility.json and cost_report.json; throws InfeasibleError
/// after writing feasibility.json when the horizon is infeasible.
void cmd_solve(const Scenario& scenario, const InitialLaw& law, const std::filesystem::path& out_dir,
               std::ostream& log);

/// Writes cost_comparison.csv and delay_penalty.csv plus one JSON report per point.
void cmd_sweep(const SweepSpec& spec, std::ostream& log);

/// One replication per dt; writes trace_<mode>_dt<dt>.csv and reveals_<mode>_dt<dt>.csv.
void cmd_trace(const Scenario& scenario, const InitialLaw& law, const std::vector<double>& dt_list, int max_agents,
               const std::filesystem::path& out_dir, std::ostream& log);

/// Writes deviation.csv with the cost-vs-epsilon curve of agent 0.
void cmd_deviate(const Scenario& scenario, const InitialLaw& law, const std::vector<double>& epsilons,
                 const std::filesystem::path& out_dir, std::ostream& log);

/// Parses argv, dispatches, and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aggregame::cli
