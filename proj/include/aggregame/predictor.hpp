#pragma once

#include "aggregame/riccati.hpp"
#include "aggregame/scenario.hpp"

#include <Eigen/Dense>

#include <vector>

namespace aggregame {

/// Virtual measurement anchoring the common predictor on one interval.
///
/// On interval j the predictor is phi_p(t, t_j) * anchor_value. The state for
/// j == n is the terminal virtual measurement at T, valid only at T.
struct PredictorState {
  int interval_index = 0;
  double anchor_value = 0.0;
  Eigen::Index anchor_node = 0;
  double anchor_time = 0.0;
};

/// The interval-0 state from the common prior guess.
PredictorState initial_predictor(const RiccatiTables& tables, double prior_value);

/// Predictor value at node k inside the state's validity window.
double evolve_predictor(const RiccatiTables& tables, const PredictorState& state, Eigen::Index k);
double evolve_predictor(const RiccatiTables& tables, const PredictorState& state, double t);

/// New anchor at t_{j+1} from x̄(t_j), revealed at t_{j+1}, and the anchor of interval j:
/// phi(t_{j+1}, t_j) x̄(t_j) + [phi_p(t_{j+1}, t_j) - phi(t_{j+1}, t_j)] anchor_j.
/// The bracket is the closed form of the control-correction integral.
PredictorState update_virtual_measurement(const RiccatiTables& tables, const PredictorState& prev,
                                          double revealed_mean);

/// Closed form of -(b^2/r) int_{t_j}^{t_{j+1}} phi(t_{j+1}, s) alpha(s) phi_p(s, t_j) ds.
double correction_coefficient(const RiccatiTables& tables, int j);
/// The same integral by composite trapezoid on the grid.
double correction_coefficient_quadrature(const RiccatiTables& tables, const ScenarioParams& params, int j);

/// Var[x̄(t) - x̂_{j-1}(t)] = (sigma^2/N) int_{t_{j-1}}^{t} phi(t, s)^2 ds at node k of interval j.
///
/// j ranges over 1..n (j == n only at T, the terminal virtual measurement);
/// j == 0 is accepted only under PriorMode::known_mean, with the window starting at 0.
double prediction_error_variance(const RiccatiTables& tables, const ScenarioParams& params, int j,
                                 Eigen::Index k, PriorMode prior = PriorMode::zero);

/// E[x̂_j(t_{j+1})^2 | x̂_{j-1}(t_{j+1})] given anchor_next_value = x̂_{j-1}(t_{j+1}).
double conditional_second_moment(const RiccatiTables& tables, const ScenarioParams& params, int j,
                                 double anchor_next_value);

/// Prediction-error variances on every interval where they are defined.
struct PredictionErrorStats {
  PriorMode prior = PriorMode::zero;
  /// variance[j](i): variance at node interval_start(j) + i, inclusive of the end node.
  /// Empty for j == 0 under the zero prior.
  std::vector<Eigen::VectorXd> variance;
  /// int over interval j of the variance; 0 where undefined.
  std::vector<double> integrated_variance;
  /// Var[x̄(T) - x̂_{n-1}(T)].
  double terminal_variance = 0.0;

  bool defined(int j) const { return variance[static_cast<std::size_t>(j)].size() != 0; }
};

PredictionErrorStats prediction_error_stats(const RiccatiTables& tables, const ScenarioParams& params,
                                            PriorMode prior);

}  // namespace aggregame
