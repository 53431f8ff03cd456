#pragma once

#include "aggregame/scenario.hpp"

#include <Eigen/Dense>

#include <string>

namespace aggregame {

/// Magnitude above which a Riccati solution counts as diverged.
inline constexpr double kOverflowGuard = 1e12;

/// Backward-pass solution on the shared grid.
///
/// p and alpha are sampled at every node; log_phi and log_phi_p are the
/// cumulative trapezoid integrals of the closed-loop rates a - (b^2/r) p and
/// a - (b^2/r)(p + alpha), so kernels between nodes are exp of a difference
/// and compose exactly.
struct RiccatiTables {
  TimeGrid grid;
  Eigen::VectorXd p;
  Eigen::VectorXd alpha;
  Eigen::VectorXd log_phi;
  Eigen::VectorXd log_phi_p;

  /// phi(t_k, t_s) for node indices s <= k.
  double phi(Eigen::Index k, Eigen::Index s) const;
  double phi_p(Eigen::Index k, Eigen::Index s) const;
};

/// dp/dt = -2 a p + (b^2/r) p^2 - q, p(T) = h; classical RK4 backward.
Eigen::VectorXd solve_p(const ScenarioParams& params, const TimeGrid& grid);

/// dalpha/dt = -2 (a - (b^2/r) p) alpha + (b^2/r) alpha^2 + q gamma, alpha(T) = -h gamma.
/// p supplies the node values; RK4 stage values of p are rebuilt from them.
Eigen::VectorXd solve_alpha(const ScenarioParams& params, const TimeGrid& grid, const Eigen::VectorXd& p);

/// dbeta/dt = (b^2/r) beta^2 - 2 a beta - q (1 - gamma), beta(T) = h (1 - gamma): the sum p + alpha
/// integrated directly, used to cross-check the pair.
Eigen::VectorXd solve_beta(const ScenarioParams& params, const TimeGrid& grid);

/// Runs both solves and the log-kernel integrals.
RiccatiTables build_tables(const ScenarioParams& params, const TimeGrid& grid);

enum class Stencil { three_point, five_point };

/// Max over interior nodes of |d(p+alpha)/dt - [(b^2/r) beta^2 - 2 a beta - q (1 - gamma)]|,
/// the derivative taken by a centered finite difference. Nodes without an
/// equally spaced stencil around them are skipped.
double beta_residual(const ScenarioParams& params, const TimeGrid& grid, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& alpha, Stencil stencil = Stencil::five_point);

/// Kernel lookups by time; both times must be grid nodes with s <= t.
double kernel_phi(const RiccatiTables& tables, double t, double s);
double kernel_phi_p(const RiccatiTables& tables, double t, double s);

/// CSV dump with header t,p,alpha,L,L_p.
std::string riccati_csv(const RiccatiTables& tables);

}  // namespace aggregame
