#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aggregame {

/// Scalar model and cost constants of the N-agent game.
///
/// Dynamics dx_i = (a x_i + b u_i) dt + sigma dw_i; each agent pays
/// int q (x_i - gamma * xbar)^2 + r u_i^2 dt + h (x_i(T) - gamma * xbar(T))^2.
struct ScenarioParams {
  double a = 0.0;
  double b = 1.0;
  double sigma = 0.0;
  double q = 1.0;
  double r = 1.0;
  double h = 0.0;
  double gamma = 0.0;
  double T = 1.0;
  double dt_obs = 1.0;
  int n_agents = 2;

  /// b^2 / r, the factor that recurs in every closed-loop rate.
  double control_authority() const { return b * b / r; }
};

/// Checks every invariant of ScenarioParams; throws ValidationError naming the field.
ScenarioParams validate(const ScenarioParams& params);

/// Number of observation intervals, floor(T / dt_obs) (>= 1 for valid params).
int interval_count(const ScenarioParams& params);

/// Integration grid with every observation instant on a node.
///
/// Interval j spans [t_j, t_{j+1}] for j < n-1 and the final interval is
/// [t_{n-1}, T]; it absorbs any remainder of T / dt_obs and gets
/// proportionally more substeps.
class TimeGrid {
 public:
  TimeGrid(const ScenarioParams& params, int steps_per_interval);

  const Eigen::VectorXd& times() const { return times_; }
  Eigen::Index node_count() const { return times_.size(); }
  Eigen::Index last_node() const { return times_.size() - 1; }
  double horizon() const { return times_(last_node()); }
  int steps_per_interval() const { return steps_per_interval_; }

  /// n, the number of reveal intervals.
  int interval_count() const { return static_cast<int>(obs_times_.size()); }
  /// t_0 = 0, t_1 = dt, ..., t_{n-1}.
  const std::vector<double>& obs_times() const { return obs_times_; }
  /// Node index of the start of interval j; j == n gives the terminal node.
  Eigen::Index interval_start(int j) const { return boundaries_.at(static_cast<std::size_t>(j)); }
  Eigen::Index interval_end(int j) const { return interval_start(j + 1); }
  /// Interval index containing node k; boundary nodes belong to the interval they open.
  int interval_of_node(Eigen::Index k) const;
  bool is_node(double t, Eigen::Index* index = nullptr) const;

 private:
  Eigen::VectorXd times_;
  std::vector<double> obs_times_;
  std::vector<Eigen::Index> boundaries_;
  std::vector<int> node_interval_;
  int steps_per_interval_;
};

enum class FeasibilityCase { bounded, escape };

/// Finite-escape analysis of beta = p + alpha through w = (b^2/r) beta - a,
/// which satisfies w' = w^2 + E backward from w(T).
struct FeasibilityReport {
  double e_value = 0.0;
  double w_terminal = 0.0;
  FeasibilityCase kind = FeasibilityCase::bounded;
  /// Escape instant (may be negative, i.e. before the horizon starts).
  std::optional<double> t_esc;
  bool feasible_on_horizon = true;
  /// The sign test E <= 0 alone; agrees with `kind` unless w(T) < -sqrt(-E).
  bool e_nonpositive = true;

  std::string describe() const;
};

FeasibilityReport feasibility_check(const ScenarioParams& params);

enum class ObservationMode { delayed, zero_latency, continuous };
enum class PriorMode { zero, known_mean };

std::string_view to_string(ObservationMode mode);
std::string_view to_string(PriorMode mode);
ObservationMode parse_observation_mode(std::string_view text);
PriorMode parse_prior_mode(std::string_view text);
/// Accepts a single mode name or "all".
std::vector<ObservationMode> parse_mode_list(std::string_view text);

/// I.i.d. initial states x_i(0) ~ Gaussian(mean, variance); variance 0 is a point mass.
struct InitialLaw {
  double mean = 0.0;
  double variance = 1.0;

  static InitialLaw point_mass(double value) { return InitialLaw{value, 0.0}; }
};

/// A scenario file: model constants plus simulation controls.
struct Scenario {
  ScenarioParams params;
  int steps_per_interval = 200;
  int n_replications = 1000;
  std::uint64_t seed = 1;
  std::vector<ObservationMode> modes{ObservationMode::delayed, ObservationMode::zero_latency,
                                     ObservationMode::continuous};
  PriorMode prior_mode = PriorMode::zero;
};

/// Parses flat key=value text. Blank lines and '#' comments are ignored;
/// unknown, duplicate or missing model keys are ValidationErrors that name
/// the line and key.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
/// Serializes back to the key=value format (round-trips through parse_scenario).
std::string format_scenario(const Scenario& scenario);

}  // namespace aggregame
