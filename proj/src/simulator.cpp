#include "aggregame/simulator.hpp"

#include "aggregame/error.hpp"
#include "aggregame/io.hpp"

#include <boost/random/normal_distribution.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace aggregame {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

SplitMix64 stream_for(std::uint64_t root, std::uint64_t replication, std::uint64_t agent) {
  std::uint64_t key = mix64(root + 0x9E3779B97F4A7C15ULL);
  key = mix64(key ^ (replication * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  key = mix64(key ^ (agent * 0xABC98388FB8FAC03ULL + 0x2545F4914F6CDD1DULL));
  return SplitMix64(key);
}

unsigned worker_count(std::size_t jobs) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("AGGREGAME_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) workers = std::min<unsigned>(workers, static_cast<unsigned>(cap));
  }
  if (jobs < workers) workers = static_cast<unsigned>(std::max<std::size_t>(jobs, 1));
  return workers;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers = worker_count(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

/// Per-step transition coefficients of the closed loop, shared by all replications.
///
/// Over [t_k, t_{k+1}] an equilibrium agent moves as
///   x <- phi_k x + (phi_p,k - phi_k) m_k + sigma sqrt(dt/2 (phi_k^2 + 1)) xi,
/// which carries the policy input m exactly along its own flow and matches the
/// trapezoid variance used by the analytic pipeline.
struct StepTable {
  Eigen::VectorXd phi;
  Eigen::VectorXd forcing;
  Eigen::VectorXd noise;
  Eigen::VectorXd dev_phi;
  Eigen::VectorXd dev_forcing;
  Eigen::VectorXd dev_noise;
};

StepTable build_steps(const RiccatiTables& tables, const ScenarioParams& params, const SimulationConfig& config) {
  const auto& t = tables.grid.times();
  const Eigen::Index steps = tables.grid.last_node();
  const double k = params.control_authority();
  const double eps = config.deviation ? config.deviation->epsilon : 0.0;
  StepTable s;
  s.phi.resize(steps);
  s.forcing.resize(steps);
  s.noise.resize(steps);
  s.dev_phi.resize(steps);
  s.dev_forcing.resize(steps);
  s.dev_noise.resize(steps);
  for (Eigen::Index i = 0; i < steps; ++i) {
    const double dt = t(i + 1) - t(i);
    double phi = tables.phi(i + 1, i);
    double forcing = tables.phi_p(i + 1, i) - phi;
    if (config.zero_control) {
      phi = std::exp(params.a * dt);
      forcing = 0.0;
    }
    s.phi(i) = phi;
    s.forcing(i) = forcing;
    s.noise(i) = params.sigma * std::sqrt(0.5 * dt * (phi * phi + 1.0));
    const double shrink = config.zero_control ? 1.0 : std::exp(-k * eps * dt);
    const double dev_phi = phi * shrink;
    s.dev_phi(i) = dev_phi;
    s.dev_forcing(i) = forcing * (config.zero_control ? 1.0 : std::exp(-0.5 * k * eps * dt));
    s.dev_noise(i) = params.sigma * std::sqrt(0.5 * dt * (dev_phi * dev_phi + 1.0));
  }
  return s;
}

struct ReplicationOutput {
  double cost = 0.0;
  double adjusted_cost = 0.0;
  std::vector<double> reveal_errors;
};

template <bool Record>
ReplicationOutput replicate(const RiccatiTables& tables, const ScenarioParams& params, const SimulationConfig& config,
                            const StepTable& steps, std::uint64_t replication, PopulationTrajectory* record) {
  const auto& grid = tables.grid;
  const auto& t = grid.times();
  const int n_agents = params.n_agents;
  const int n = grid.interval_count();
  const Eigen::Index last = grid.last_node();
  const double b_over_r = params.b / params.r;
  const double q = params.q, r = params.r, g = params.gamma;
  const int deviator = config.deviation ? config.deviation->agent : -1;
  const double eps = config.deviation ? config.deviation->epsilon : 0.0;
  const bool delayed = config.mode == ObservationMode::delayed;
  const bool continuous = config.mode == ObservationMode::continuous;

  std::vector<SplitMix64> engines;
  engines.reserve(static_cast<std::size_t>(n_agents));
  for (int i = 0; i < n_agents; ++i) engines.push_back(stream_for(config.seed, replication, static_cast<std::uint64_t>(i)));
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd x(n_agents);
  const double spread = std::sqrt(config.initial_law.variance);
  for (int i = 0; i < n_agents; ++i) x(i) = config.initial_law.mean + spread * normal(engines[static_cast<std::size_t>(i)]);
  double mean = x.mean();

  PredictorState state = initial_predictor(
      tables, (delayed && config.prior_mode == PriorMode::zero) ? 0.0 : mean);
  double observed = mean;  // x̄(t_j), delivered at t_{j+1}

  const auto policy_input = [&](Eigen::Index node, double current_mean) {
    return continuous ? current_mean : tables.phi_p(node, state.anchor_node) * state.anchor_value;
  };
  const auto control_of = [&](int agent, Eigen::Index node, double xi, double m) {
    if (config.zero_control) return 0.0;
    const double gain = tables.p(node) + (agent == deviator ? eps : 0.0);
    return -b_over_r * (gain * xi + tables.alpha(node) * m);
  };

  ReplicationOutput out;
  if (config.collect_reveal_errors) out.reveal_errors.reserve(static_cast<std::size_t>(n));

  if constexpr (Record) {
    record->times = t;
    record->states.resize(n_agents, last + 1);
    record->controls.resize(n_agents, last + 1);
    record->empirical_mean.resize(last + 1);
    record->predictor_path.resize(last + 1);
    record->reveal_log.clear();
  }

  double m = policy_input(0, mean);
  double running = 0.0, running_adjusted = 0.0;
  const auto integrand = [&](Eigen::Index node, double m_node, double mean_node, double* adjusted) {
    const double u = control_of(0, node, x(0), m_node);
    const double effort = r * u * u;
    *adjusted = q * std::pow(x(0) - g * m_node, 2) + effort;
    return q * std::pow(x(0) - g * mean_node, 2) + effort;
  };

  for (Eigen::Index k = 0; k < last; ++k) {
    if constexpr (Record) {
      record->states.col(k) = x;
      for (int i = 0; i < n_agents; ++i) record->controls(i, k) = control_of(i, k, x(i), m);
      record->empirical_mean(k) = mean;
      record->predictor_path(k) = m;
    }
    double left_adjusted = 0.0;
    const double left = integrand(k, m, mean, &left_adjusted);

    const double phi = steps.phi(k), forcing = steps.forcing(k) * m, noise = steps.noise(k);
    for (int i = 0; i < n_agents; ++i) {
      const double xi = normal(engines[static_cast<std::size_t>(i)]);
      if (i == deviator) {
        x(i) = steps.dev_phi(k) * x(i) + steps.dev_forcing(k) * m + steps.dev_noise(k) * xi;
      } else {
        x(i) = phi * x(i) + forcing + noise * xi;
      }
    }
    mean = x.mean();

    const double m_right = policy_input(k + 1, mean);
    double right_adjusted = 0.0;
    const double right = integrand(k + 1, m_right, mean, &right_adjusted);
    const double dt = t(k + 1) - t(k);
    running += 0.5 * dt * (left + right);
    running_adjusted += 0.5 * dt * (left_adjusted + right_adjusted);
    m = m_right;

    if (state.interval_index < n && k + 1 == grid.interval_end(state.interval_index)) {
      const bool terminal = k + 1 == last;
      const double reveal_time = t(k + 1);
      if (delayed) {
        const double delivered = observed;
        const double observed_time = t(state.anchor_node);
        state = update_virtual_measurement(tables, state, delivered);
        if constexpr (Record) {
          if (!terminal) record->reveal_log.push_back({reveal_time, observed_time, delivered});
        }
      } else {
        state = PredictorState{state.interval_index + 1, mean, k + 1, reveal_time};
        if constexpr (Record) {
          if (!terminal && !continuous) record->reveal_log.push_back({reveal_time, reveal_time, mean});
        }
      }
      observed = mean;
      if (config.collect_reveal_errors) out.reveal_errors.push_back(mean - state.anchor_value);
      if (!terminal) m = policy_input(k + 1, mean);
    }
  }

  const double terminal_anchor = continuous ? mean : state.anchor_value;
  out.cost = running + params.h * std::pow(x(0) - g * mean, 2);
  out.adjusted_cost = running_adjusted + params.h * std::pow(x(0) - g * terminal_anchor, 2);

  if constexpr (Record) {
    record->states.col(last) = x;
    for (int i = 0; i < n_agents; ++i) record->controls(i, last) = control_of(i, last, x(i), m);
    record->empirical_mean(last) = mean;
    record->predictor_path(last) = m;
    record->cost = out.cost;
    record->adjusted_cost = out.adjusted_cost;
  }
  return out;
}

double pairwise_sum(const double* begin, std::size_t count) {
  if (count <= 8) {
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += begin[i];
    return acc;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(begin, half) + pairwise_sum(begin + half, count - half);
}

}  // namespace

PopulationTrajectory simulate_replication(const RiccatiTables& tables, const ScenarioParams& params,
                                          const SimulationConfig& config, std::uint64_t replication) {
  const StepTable steps = build_steps(tables, params, config);
  PopulationTrajectory trajectory;
  replicate<true>(tables, params, config, steps, replication, &trajectory);
  return trajectory;
}

SampleStats sample_stats(const std::vector<double>& values) {
  SampleStats s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
  if (values.size() > 1) {
    std::vector<double> squares(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) squares[i] = (values[i] - s.mean) * (values[i] - s.mean);
    s.variance = pairwise_sum(squares.data(), squares.size()) / static_cast<double>(values.size() - 1);
    s.standard_error = std::sqrt(s.variance / static_cast<double>(values.size()));
  }
  return s;
}

BatchResult run_batch(const RiccatiTables& tables, const ScenarioParams& params, const SimulationConfig& config) {
  if (config.n_replications < 1) throw ValidationError("n_replications must be at least 1");
  if (config.initial_law.variance < 0.0) throw ValidationError("initial variance must be nonnegative");
  if (config.deviation && (config.deviation->agent < 0 || config.deviation->agent >= params.n_agents)) {
    throw ValidationError("deviating agent out of range");
  }
  const StepTable steps = build_steps(tables, params, config);
  const auto reps = static_cast<std::size_t>(config.n_replications);
  std::vector<ReplicationOutput> outputs(reps);
  parallel_for(reps, [&](std::size_t rep) {
    outputs[rep] = replicate<false>(tables, params, config, steps, rep, nullptr);
  });

  BatchResult result;
  result.mode = config.mode;
  result.costs.resize(reps);
  result.adjusted_costs.resize(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    result.costs[rep] = outputs[rep].cost;
    result.adjusted_costs[rep] = outputs[rep].adjusted_cost;
    if (!std::isfinite(outputs[rep].cost)) throw NumericError("simulated cost is not finite");
  }
  result.cost = sample_stats(result.costs);
  result.adjusted_cost = sample_stats(result.adjusted_costs);
  if (config.collect_reveal_errors) {
    const auto width = static_cast<Eigen::Index>(outputs.front().reveal_errors.size());
    result.reveal_errors.resize(static_cast<Eigen::Index>(reps), width);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      for (Eigen::Index j = 0; j < width; ++j) {
        result.reveal_errors(static_cast<Eigen::Index>(rep), j) = outputs[rep].reveal_errors[static_cast<std::size_t>(j)];
      }
    }
  }
  return result;
}

std::vector<DeviationPoint> nash_deviation_test(const RiccatiTables& tables, const ScenarioParams& params,
                                                const SimulationConfig& config, const std::vector<double>& epsilons) {
  SimulationConfig base = config;
  base.deviation = Deviation{config.deviation ? config.deviation->agent : 0, 0.0};
  const BatchResult reference = run_batch(tables, params, base);

  std::vector<DeviationPoint> curve;
  curve.reserve(epsilons.size());
  for (double eps : epsilons) {
    SimulationConfig variant = base;
    variant.deviation->epsilon = eps;
    const BatchResult batch = eps == 0.0 ? reference : run_batch(tables, params, variant);
    std::vector<double> gap(batch.costs.size()), adjusted_gap(batch.costs.size());
    for (std::size_t i = 0; i < gap.size(); ++i) {
      gap[i] = batch.costs[i] - reference.costs[i];
      adjusted_gap[i] = batch.adjusted_costs[i] - reference.adjusted_costs[i];
    }
    curve.push_back(
        DeviationPoint{eps, batch.cost, sample_stats(gap), batch.adjusted_cost, sample_stats(adjusted_gap)});
  }
  return curve;
}

std::string trajectory_csv(const std::vector<std::pair<std::uint64_t, PopulationTrajectory>>& runs, int max_agents,
                           const std::string& prefix_header, const std::string& prefix) {
  std::ostringstream out;
  out << prefix_header << "replication,t,series,value\n";
  for (const auto& [replication, run] : runs) {
    const Eigen::Index agents = std::min<Eigen::Index>(max_agents, run.states.rows());
    for (Eigen::Index k = 0; k < run.times.size(); ++k) {
      const std::string head = prefix + std::to_string(replication) + ',' + io::format_number(run.times(k)) + ',';
      for (Eigen::Index i = 0; i < agents; ++i) {
        out << head << i << ',' << io::format_number(run.states(i, k)) << '\n';
      }
      out << head << "mean," << io::format_number(run.empirical_mean(k)) << '\n';
      out << head << "predictor," << io::format_number(run.predictor_path(k)) << '\n';
    }
  }
  return out.str();
}

}  // namespace aggregame
