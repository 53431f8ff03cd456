#pragma once

#include "aggregame/predictor.hpp"
#include "aggregame/riccati.hpp"
#include "aggregame/scenario.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace aggregame {

/// Backward value coefficients of the delayed-reveal game.
///
/// On interval j the value is p x^2 + 2 alpha x xhat + psi_j(t) A_j^2 + gamma_j(t),
/// with A_j the interval's virtual measurement. psi[j] and gamma[j] hold the
/// coefficients on the nodes interval_start(j) .. interval_end(j).
struct ValueCoefficients {
  std::vector<Eigen::VectorXd> psi;
  std::vector<Eigen::VectorXd> gamma;
  /// psi_j(t_j) and gamma_j(t_j); index n holds the terminal handoff (h gamma^2, 0).
  std::vector<double> psi_start;
  std::vector<double> gamma_start;
  /// Reveal-uncertainty term each interval adds to gamma (psi_{j+1}(t_{j+1}) E[Var A_{j+1}]).
  std::vector<double> reveal_term;
  /// sigma^2 int p over each interval.
  std::vector<double> noise_term;
};

ValueCoefficients backward_psi_gamma(const RiccatiTables& tables, const ScenarioParams& params);

/// p(0) x^2 + 2 alpha(0) x anchor0 + psi_0(0) anchor0^2 + gamma_0(0).
double adjusted_value(const ValueCoefficients& coeffs, const RiccatiTables& tables, double x_i0, double anchor0);

struct DelayPenalty {
  /// Contribution of each interval (q gamma^2 int E[Delta^2]); 0 for excluded intervals.
  std::vector<double> per_interval;
  double terminal = 0.0;
  double total = 0.0;
  /// Set under the zero prior, where the first interval carries no accounted error.
  bool first_interval_excluded = false;
};

DelayPenalty delay_penalty(const RiccatiTables& tables, const ScenarioParams& params,
                           const PredictionErrorStats& stats);

/// Continuous-observation psi from its backward ODE, one value per node.
Eigen::VectorXd continuous_psi(const RiccatiTables& tables, const ScenarioParams& params);

double continuous_baseline(const RiccatiTables& tables, const ScenarioParams& params, double x_i0, double mean0);

/// Second moments of (x_i(0), anchor0, xbar(0)) that the quadratic values need.
struct InitialMoments {
  double xx = 0.0;
  double xa = 0.0;
  double aa = 0.0;
  double xm = 0.0;
  double mm = 0.0;

  static InitialMoments point(double x_i0, double anchor0, double mean0);
  /// Expectations over i.i.d. initial states; the anchor follows the prior mode.
  static InitialMoments from_law(const InitialLaw& law, int n_agents, PriorMode prior);
};

struct IntervalBreakdown {
  int index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double psi_start = 0.0;
  double gamma_start = 0.0;
  double reveal_term = 0.0;
  double delta_v = 0.0;
  bool penalty_defined = true;
};

struct CostReport {
  double v_adjusted = 0.0;
  double delta_v = 0.0;
  double v_original = 0.0;
  double v_continuous = 0.0;
  double delta_j = 0.0;
  double terminal_penalty = 0.0;
  PriorMode prior = PriorMode::zero;
  std::vector<IntervalBreakdown> per_interval;

  std::string to_json() const;
};

/// Assembles the report. delta_j is summed from the terms that differ between
/// the two information patterns, so shared terms cancel exactly.
CostReport total_delta_j(const RiccatiTables& tables, const ScenarioParams& params, const ValueCoefficients& coeffs,
                         const DelayPenalty& penalty, const Eigen::VectorXd& psi_continuous,
                         const InitialMoments& moments, PriorMode prior);

/// Full analytic pipeline from tables to report.
CostReport analytic_report(const RiccatiTables& tables, const ScenarioParams& params, PriorMode prior,
                           const InitialMoments& moments);

}  // namespace aggregame
