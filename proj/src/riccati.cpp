#include "aggregame/riccati.hpp"

#include "aggregame/error.hpp"
#include "aggregame/io.hpp"
#include "aggregame/numerics.hpp"

#include <cmath>
#include <sstream>

namespace aggregame {

double RiccatiTables::phi(Eigen::Index k, Eigen::Index s) const {
  if (k < s) throw ValidationError("reversed kernel arguments");
  return std::exp(log_phi(k) - log_phi(s));
}

double RiccatiTables::phi_p(Eigen::Index k, Eigen::Index s) const {
  if (k < s) throw ValidationError("reversed kernel arguments");
  return std::exp(log_phi_p(k) - log_phi_p(s));
}

Eigen::VectorXd solve_p(const ScenarioParams& params, const TimeGrid& grid) {
  const double a = params.a, q = params.q, k = params.control_authority();
  const auto field = [=](double, double p) { return -2.0 * a * p + k * p * p - q; };
  const auto& t = grid.times();
  Eigen::VectorXd p(grid.node_count());
  p(grid.last_node()) = params.h;
  for (Eigen::Index i = grid.last_node(); i > 0; --i) {
    p(i - 1) = numerics::rk4_step(field, t(i), p(i), t(i - 1) - t(i));
    if (!numerics::bounded(p(i - 1), kOverflowGuard)) throw NumericError("p diverged");
  }
  return p;
}

Eigen::VectorXd solve_alpha(const ScenarioParams& params, const TimeGrid& grid, const Eigen::VectorXd& p) {
  if (p.size() != grid.node_count()) throw ValidationError("p table does not match grid");
  const double a = params.a, q = params.q, g = params.gamma, k = params.control_authority();
  using State = Eigen::Vector2d;  // (p, alpha)
  const auto field = [=](double, const State& y) {
    return State(-2.0 * a * y(0) + k * y(0) * y(0) - q,
                 -2.0 * (a - k * y(0)) * y(1) + k * y(1) * y(1) + q * g);
  };
  const auto& t = grid.times();
  Eigen::VectorXd alpha(grid.node_count());
  alpha(grid.last_node()) = -params.h * params.gamma;
  for (Eigen::Index i = grid.last_node(); i > 0; --i) {
    const State next = numerics::rk4_step(field, t(i), State(p(i), alpha(i)), t(i - 1) - t(i));
    alpha(i - 1) = next(1);
    if (!numerics::bounded(alpha(i - 1), kOverflowGuard)) {
      throw NumericError("alpha escaped before t = 0; horizon infeasible");
    }
  }
  return alpha;
}

Eigen::VectorXd solve_beta(const ScenarioParams& params, const TimeGrid& grid) {
  const double a = params.a, q = params.q, g = params.gamma, k = params.control_authority();
  const auto field = [=](double, double b) { return k * b * b - 2.0 * a * b - q * (1.0 - g); };
  const auto& t = grid.times();
  Eigen::VectorXd beta(grid.node_count());
  beta(grid.last_node()) = params.h * (1.0 - g);
  for (Eigen::Index i = grid.last_node(); i > 0; --i) {
    beta(i - 1) = numerics::rk4_step(field, t(i), beta(i), t(i - 1) - t(i));
    if (!numerics::bounded(beta(i - 1), kOverflowGuard)) throw NumericError("beta escaped before t = 0");
  }
  return beta;
}

RiccatiTables build_tables(const ScenarioParams& params, const TimeGrid& grid) {
  RiccatiTables tables{grid, {}, {}, {}, {}};
  tables.p = solve_p(params, grid);
  tables.alpha = solve_alpha(params, grid, tables.p);
  const double k = params.control_authority();
  const Eigen::ArrayXd open_rate = params.a - k * tables.p.array();
  const Eigen::ArrayXd predictor_rate = open_rate - k * tables.alpha.array();
  tables.log_phi = numerics::cumulative_trapezoid(grid.times(), open_rate);
  tables.log_phi_p = numerics::cumulative_trapezoid(grid.times(), predictor_rate);
  return tables;
}

double beta_residual(const ScenarioParams& params, const TimeGrid& grid, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& alpha, Stencil stencil) {
  const double a = params.a, q = params.q, g = params.gamma, k = params.control_authority();
  const auto& t = grid.times();
  const Eigen::VectorXd beta = p + alpha;
  const Eigen::Index reach = stencil == Stencil::three_point ? 1 : 2;
  double worst = 0.0;
  for (Eigen::Index i = reach; i + reach < beta.size(); ++i) {
    const double h = t(i + 1) - t(i);
    bool uniform = true;
    for (Eigen::Index d = -reach; d < reach; ++d) {
      uniform = uniform && std::abs((t(i + d + 1) - t(i + d)) - h) <= 1e-9 * h;
    }
    if (!uniform) continue;
    const double derivative =
        stencil == Stencil::three_point
            ? (beta(i + 1) - beta(i - 1)) / (2.0 * h)
            : (-beta(i + 2) + 8.0 * beta(i + 1) - 8.0 * beta(i - 1) + beta(i - 2)) / (12.0 * h);
    const double b = beta(i);
    const double field = k * b * b - 2.0 * a * b - q * (1.0 - g);
    worst = std::max(worst, std::abs(derivative - field));
  }
  return worst;
}

namespace {

Eigen::Index node_index(const TimeGrid& grid, double t) {
  Eigen::Index k = 0;
  if (!grid.is_node(t, &k)) throw ValidationError("kernel query off the grid");
  return k;
}

}  // namespace

double kernel_phi(const RiccatiTables& tables, double t, double s) {
  if (t < s) throw ValidationError("reversed kernel arguments");
  return tables.phi(node_index(tables.grid, t), node_index(tables.grid, s));
}

double kernel_phi_p(const RiccatiTables& tables, double t, double s) {
  if (t < s) throw ValidationError("reversed kernel arguments");
  return tables.phi_p(node_index(tables.grid, t), node_index(tables.grid, s));
}

std::string riccati_csv(const RiccatiTables& tables) {
  std::ostringstream out;
  out << "t,p,alpha,L,L_p\n";
  const auto& t = tables.grid.times();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    out << io::format_number(t(i)) << ',' << io::format_number(tables.p(i)) << ','
        << io::format_number(tables.alpha(i)) << ',' << io::format_number(tables.log_phi(i)) << ','
        << io::format_number(tables.log_phi_p(i)) << '\n';
  }
  return out.str();
}

}  // namespace aggregame
