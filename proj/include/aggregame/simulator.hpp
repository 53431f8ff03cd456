#pragma once

#include "aggregame/predictor.hpp"
#include "aggregame/riccati.hpp"
#include "aggregame/scenario.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace aggregame {

/// SplitMix64 generator over a 64-bit counter; cheap to construct per stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent stream for (root seed, replication, agent). Streams for distinct
/// keys never depend on how many other streams were drawn.
SplitMix64 stream_for(std::uint64_t root, std::uint64_t replication, std::uint64_t agent);

/// Number of workers: hardware concurrency, capped by AGGREGAME_THREADS and by `jobs`.
unsigned worker_count(std::size_t jobs);

/// Runs body(i) for i in [0, count) over worker_count(count) threads.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

struct Deviation {
  int agent = 0;
  double epsilon = 0.0;
};

struct SimulationConfig {
  ObservationMode mode = ObservationMode::delayed;
  int n_replications = 1000;
  std::uint64_t seed = 1;
  InitialLaw initial_law;
  PriorMode prior_mode = PriorMode::zero;
  /// Agent plays u = -(b/r)((p + epsilon) x + alpha m) instead of the equilibrium gain.
  std::optional<Deviation> deviation;
  /// Test hook: every agent applies u = 0.
  bool zero_control = false;
  /// Record x̄(t_j) - A_j at every reveal (j = 1..n-1) and at T (j = n).
  bool collect_reveal_errors = false;
};

struct RevealEvent {
  /// Reveal instant t_{j+1} and the observation instant t_j whose mean is delivered.
  double reveal_time = 0.0;
  double observed_time = 0.0;
  double value = 0.0;
};

struct PopulationTrajectory {
  Eigen::VectorXd times;
  /// states(i, k) = x_i(t_k); controls(i, k) is u_i at t_k from the right.
  Eigen::MatrixXd states;
  Eigen::MatrixXd controls;
  Eigen::VectorXd empirical_mean;
  /// The policy's estimate of the mean at each node (right limit at reveal nodes).
  Eigen::VectorXd predictor_path;
  std::vector<RevealEvent> reveal_log;
  /// Realized costs of the designated agent 0.
  double cost = 0.0;
  double adjusted_cost = 0.0;
};

PopulationTrajectory simulate_replication(const RiccatiTables& tables, const ScenarioParams& params,
                                          const SimulationConfig& config, std::uint64_t replication);

struct SampleStats {
  double mean = 0.0;
  double standard_error = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

/// Sample mean, unbiased variance and standard error, summed pairwise in index order.
SampleStats sample_stats(const std::vector<double>& values);

struct BatchResult {
  ObservationMode mode = ObservationMode::delayed;
  SampleStats cost;
  SampleStats adjusted_cost;
  std::vector<double> costs;
  std::vector<double> adjusted_costs;
  /// reveal_errors(rep, j - 1) = x̄(t_j) - A_j for j = 1..n; empty unless collected.
  Eigen::MatrixXd reveal_errors;
};

BatchResult run_batch(const RiccatiTables& tables, const ScenarioParams& params, const SimulationConfig& config);

struct DeviationPoint {
  double epsilon = 0.0;
  SampleStats cost;
  /// Paired difference J(epsilon) - J(0) over common random numbers.
  SampleStats gap;
  SampleStats adjusted_cost;
  SampleStats adjusted_gap;
};

/// Costs of agent 0 under each gain perturbation, all sharing the noise of `config`.
std::vector<DeviationPoint> nash_deviation_test(const RiccatiTables& tables, const ScenarioParams& params,
                                                const SimulationConfig& config, const std::vector<double>& epsilons);

/// Long-format CSV rows: replication,t,series,value with series an agent id, "mean" or "predictor".
/// `prefix` is prepended to every row (and `prefix_header` to the header) for self-describing output.
std::string trajectory_csv(const std::vector<std::pair<std::uint64_t, PopulationTrajectory>>& runs,
                           int max_agents, const std::string& prefix_header = {}, const std::string& prefix = {});

}  // namespace aggregame
