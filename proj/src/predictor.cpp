#include "aggregame/predictor.hpp"

#include "aggregame/error.hpp"
#include "aggregame/numerics.hpp"

#include <cmath>

namespace aggregame {

namespace {

double noise_scale(const ScenarioParams& params) { return params.sigma * params.sigma / params.n_agents; }

// int_{start}^{k} phi(k, s)^2 ds by trapezoid, without the sigma^2/N factor.
double unit_error_variance(const RiccatiTables& tables, Eigen::Index start, Eigen::Index k) {
  const auto& t = tables.grid.times();
  double acc = 0.0;
  for (Eigen::Index s = start; s < k; ++s) {
    const double left = tables.phi(k, s);
    const double right = tables.phi(k, s + 1);
    acc += 0.5 * (left * left + right * right) * (t(s + 1) - t(s));
  }
  return acc;
}

}  // namespace

PredictorState initial_predictor(const RiccatiTables& tables, double prior_value) {
  return PredictorState{0, prior_value, 0, tables.grid.times()(0)};
}

double evolve_predictor(const RiccatiTables& tables, const PredictorState& state, Eigen::Index k) {
  const auto& grid = tables.grid;
  const Eigen::Index end = state.interval_index >= grid.interval_count()
                               ? grid.last_node()
                               : grid.interval_end(state.interval_index);
  if (k < state.anchor_node || k > end) throw ValidationError("query outside predictor validity window");
  return tables.phi_p(k, state.anchor_node) * state.anchor_value;
}

double evolve_predictor(const RiccatiTables& tables, const PredictorState& state, double t) {
  Eigen::Index k = 0;
  if (!tables.grid.is_node(t, &k)) throw ValidationError("query outside predictor validity window");
  return evolve_predictor(tables, state, k);
}

double correction_coefficient(const RiccatiTables& tables, int j) {
  const Eigen::Index lo = tables.grid.interval_start(j);
  const Eigen::Index hi = tables.grid.interval_end(j);
  return tables.phi_p(hi, lo) - tables.phi(hi, lo);
}

double correction_coefficient_quadrature(const RiccatiTables& tables, const ScenarioParams& params, int j) {
  const Eigen::Index lo = tables.grid.interval_start(j);
  const Eigen::Index hi = tables.grid.interval_end(j);
  Eigen::VectorXd integrand(hi - lo + 1);
  for (Eigen::Index s = lo; s <= hi; ++s) {
    integrand(s - lo) = tables.phi(hi, s) * tables.alpha(s) * tables.phi_p(s, lo);
  }
  return -params.control_authority() *
         numerics::trapezoid(tables.grid.times().segment(lo, hi - lo + 1), integrand, 0, hi - lo);
}

PredictorState update_virtual_measurement(const RiccatiTables& tables, const PredictorState& prev,
                                          double revealed_mean) {
  const auto& grid = tables.grid;
  const int j = prev.interval_index;
  if (j >= grid.interval_count()) throw ValidationError("no reveal after the horizon");
  if (prev.anchor_node != grid.interval_start(j)) throw ValidationError("predictor state not on its interval start");
  const Eigen::Index lo = grid.interval_start(j);
  const Eigen::Index hi = grid.interval_end(j);
  PredictorState next;
  next.interval_index = j + 1;
  next.anchor_node = hi;
  next.anchor_time = grid.times()(hi);
  next.anchor_value = tables.phi(hi, lo) * revealed_mean + correction_coefficient(tables, j) * prev.anchor_value;
  return next;
}

double prediction_error_variance(const RiccatiTables& tables, const ScenarioParams& params, int j, Eigen::Index k,
                                 PriorMode prior) {
  const auto& grid = tables.grid;
  const int n = grid.interval_count();
  if (j < 0 || j > n) throw ValidationError("interval index out of range");
  if (j == 0 && prior == PriorMode::zero) {
    throw ValidationError("first-interval prediction error is undefined under the zero prior");
  }
  const Eigen::Index lo = grid.interval_start(j);
  const Eigen::Index hi = j == n ? grid.last_node() : grid.interval_end(j);
  if (k < lo || k > hi) throw ValidationError("time outside the interval");
  const Eigen::Index window = grid.interval_start(j == 0 ? 0 : j - 1);
  return noise_scale(params) * unit_error_variance(tables, window, k);
}

double conditional_second_moment(const RiccatiTables& tables, const ScenarioParams& params, int j,
                                 double anchor_next_value) {
  const auto& grid = tables.grid;
  if (j < 1 || j >= grid.interval_count()) throw ValidationError("interval index out of range");
  const Eigen::Index lo = grid.interval_start(j - 1);
  const Eigen::Index hi = grid.interval_start(j);
  const Eigen::Index target = grid.interval_end(j);
  const auto& t = grid.times();
  double acc = 0.0;
  for (Eigen::Index s = lo; s < hi; ++s) {
    const double left = tables.phi(target, s);
    const double right = tables.phi(target, s + 1);
    acc += 0.5 * (left * left + right * right) * (t(s + 1) - t(s));
  }
  return anchor_next_value * anchor_next_value + noise_scale(params) * acc;
}

PredictionErrorStats prediction_error_stats(const RiccatiTables& tables, const ScenarioParams& params,
                                            PriorMode prior) {
  const auto& grid = tables.grid;
  const auto& t = grid.times();
  const int n = grid.interval_count();
  const double scale = noise_scale(params);
  PredictionErrorStats stats;
  stats.prior = prior;
  stats.variance.resize(static_cast<std::size_t>(n));
  stats.integrated_variance.assign(static_cast<std::size_t>(n), 0.0);

  // Variance at node k for a window opened at node w:
  // exp(2 (L(k) - L(w))) * int_w^k exp(-2 (L(s) - L(w))) ds, trapezoid in s.
  const auto window_variances = [&](Eigen::Index w, Eigen::Index last) {
    Eigen::VectorXd out(last - w + 1);
    double running = 0.0;
    double previous = 1.0;
    out(0) = 0.0;
    for (Eigen::Index k = w + 1; k <= last; ++k) {
      const double weight = std::exp(-2.0 * (tables.log_phi(k) - tables.log_phi(w)));
      running += 0.5 * (previous + weight) * (t(k) - t(k - 1));
      previous = weight;
      out(k - w) = scale * (std::exp(2.0 * (tables.log_phi(k) - tables.log_phi(w))) * running);
    }
    return out;
  };

  for (int j = 0; j < n; ++j) {
    if (j == 0 && prior == PriorMode::zero) continue;
    const Eigen::Index w = grid.interval_start(j == 0 ? 0 : j - 1);
    const Eigen::Index lo = grid.interval_start(j);
    const Eigen::Index hi = grid.interval_end(j);
    const Eigen::VectorXd all = window_variances(w, hi);
    stats.variance[static_cast<std::size_t>(j)] = all.tail(hi - lo + 1);
    stats.integrated_variance[static_cast<std::size_t>(j)] =
        numerics::trapezoid(t.segment(lo, hi - lo + 1), stats.variance[static_cast<std::size_t>(j)], 0, hi - lo);
  }
  const Eigen::Index w = grid.interval_start(n - 1);
  stats.terminal_variance = window_variances(w, grid.last_node())(grid.last_node() - w);
  return stats;
}

}  // namespace aggregame
