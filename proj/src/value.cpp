#include "aggregame/value.hpp"

#include "aggregame/error.hpp"
#include "aggregame/numerics.hpp"

#include <json.hpp>

#include <cmath>

namespace aggregame {

namespace {

std::size_t sz(int j) { return static_cast<std::size_t>(j); }

double unscaled_reveal_variance(const RiccatiTables& tables, Eigen::Index lo, Eigen::Index hi, Eigen::Index target) {
  const auto& t = tables.grid.times();
  double acc = 0.0;
  for (Eigen::Index s = lo; s < hi; ++s) {
    const double left = tables.phi(target, s);
    const double right = tables.phi(target, s + 1);
    acc += 0.5 * (left * left + right * right) * (t(s + 1) - t(s));
  }
  return acc;
}

}  // namespace

ValueCoefficients backward_psi_gamma(const RiccatiTables& tables, const ScenarioParams& params) {
  const auto& grid = tables.grid;
  const auto& t = grid.times();
  const int n = grid.interval_count();
  const double k = params.control_authority();
  const double qg2 = params.q * params.gamma * params.gamma;
  const double hg2 = params.h * params.gamma * params.gamma;
  const double sigma2 = params.sigma * params.sigma;
  const double scale = sigma2 / params.n_agents;

  ValueCoefficients c;
  c.psi.resize(sz(n));
  c.gamma.resize(sz(n));
  c.psi_start.assign(sz(n + 1), 0.0);
  c.gamma_start.assign(sz(n + 1), 0.0);
  c.reveal_term.assign(sz(n), 0.0);
  c.noise_term.assign(sz(n), 0.0);
  c.psi_start[sz(n)] = hg2;

  for (int j = n - 1; j >= 0; --j) {
    const Eigen::Index lo = grid.interval_start(j);
    const Eigen::Index hi = grid.interval_end(j);
    const Eigen::Index len = hi - lo + 1;

    // Reveal of A_{j+1}: noise on [t_{j-1}, t_j] pushed to t_{j+1}; absent on the first interval.
    if (j >= 1) {
      const double var = scale * unscaled_reveal_variance(tables, grid.interval_start(j - 1), lo, hi);
      c.reveal_term[sz(j)] = c.psi_start[sz(j + 1)] * var;
    }

    Eigen::VectorXd psi(len), gamma(len);
    const double handoff = c.psi_start[sz(j + 1)] * std::pow(tables.phi_p(hi, lo), 2);
    double source_tail = 0.0;
    double p_tail = 0.0;
    const auto source = [&](Eigen::Index i) {
      const double kernel = tables.phi_p(i, lo);
      return kernel * kernel * (k * tables.alpha(i) * tables.alpha(i) - qg2);
    };
    psi(len - 1) = handoff;
    gamma(len - 1) = c.gamma_start[sz(j + 1)] + c.reveal_term[sz(j)];
    for (Eigen::Index i = hi - 1; i >= lo; --i) {
      const double dt = t(i + 1) - t(i);
      source_tail += 0.5 * (source(i) + source(i + 1)) * dt;
      p_tail += 0.5 * (tables.p(i) + tables.p(i + 1)) * dt;
      psi(i - lo) = handoff - source_tail;
      gamma(i - lo) = c.gamma_start[sz(j + 1)] + sigma2 * p_tail + c.reveal_term[sz(j)];
    }
    c.noise_term[sz(j)] = sigma2 * p_tail;
    c.psi_start[sz(j)] = psi(0);
    c.gamma_start[sz(j)] = gamma(0);
    c.psi[sz(j)] = std::move(psi);
    c.gamma[sz(j)] = std::move(gamma);
  }
  return c;
}

double adjusted_value(const ValueCoefficients& coeffs, const RiccatiTables& tables, double x_i0, double anchor0) {
  return tables.p(0) * x_i0 * x_i0 + 2.0 * tables.alpha(0) * x_i0 * anchor0 + coeffs.psi_start[0] * anchor0 * anchor0 +
         coeffs.gamma_start[0];
}

DelayPenalty delay_penalty(const RiccatiTables& tables, const ScenarioParams& params,
                           const PredictionErrorStats& stats) {
  const int n = tables.grid.interval_count();
  const double g2 = params.gamma * params.gamma;
  DelayPenalty out;
  out.per_interval.assign(sz(n), 0.0);
  out.first_interval_excluded = stats.prior == PriorMode::zero;
  out.terminal = params.h * g2 * stats.terminal_variance;
  double total = out.terminal;
  for (int j = n - 1; j >= 0; --j) {
    if (!stats.defined(j)) continue;
    out.per_interval[sz(j)] = params.q * g2 * stats.integrated_variance[sz(j)];
    total += out.per_interval[sz(j)];
  }
  out.total = total;
  return out;
}

Eigen::VectorXd continuous_psi(const RiccatiTables& tables, const ScenarioParams& params) {
  const auto& grid = tables.grid;
  const auto& t = grid.times();
  const double a = params.a, q = params.q, g = params.gamma, k = params.control_authority();
  using State = Eigen::Vector3d;  // (p, alpha, psi)
  const auto field = [=](double, const State& y) {
    const double rate = a - k * (y(0) + y(1));
    return State(-2.0 * a * y(0) + k * y(0) * y(0) - q, -2.0 * (a - k * y(0)) * y(1) + k * y(1) * y(1) + q * g,
                 -2.0 * rate * y(2) - q * g * g + k * y(1) * y(1));
  };
  Eigen::VectorXd psi(grid.node_count());
  const Eigen::Index last = grid.last_node();
  psi(last) = params.h * g * g;
  for (Eigen::Index i = last; i > 0; --i) {
    const State next = numerics::rk4_step(field, t(i), State(tables.p(i), tables.alpha(i), psi(i)), t(i - 1) - t(i));
    psi(i - 1) = next(2);
    if (!numerics::bounded(psi(i - 1), kOverflowGuard)) throw NumericError("continuous psi diverged");
  }
  return psi;
}

namespace {

double noise_integral(const RiccatiTables& tables, const ScenarioParams& params) {
  return params.sigma * params.sigma *
         numerics::trapezoid(tables.grid.times(), tables.p, 0, tables.grid.last_node());
}

}  // namespace

double continuous_baseline(const RiccatiTables& tables, const ScenarioParams& params, double x_i0, double mean0) {
  const Eigen::VectorXd psi = continuous_psi(tables, params);
  return tables.p(0) * x_i0 * x_i0 + 2.0 * tables.alpha(0) * mean0 * x_i0 + psi(0) * mean0 * mean0 +
         noise_integral(tables, params);
}

InitialMoments InitialMoments::point(double x_i0, double anchor0, double mean0) {
  return InitialMoments{x_i0 * x_i0, x_i0 * anchor0, anchor0 * anchor0, x_i0 * mean0, mean0 * mean0};
}

InitialMoments InitialMoments::from_law(const InitialLaw& law, int n_agents, PriorMode prior) {
  const double mu2 = law.mean * law.mean;
  const double own = mu2 + law.variance;
  const double with_mean = mu2 + law.variance / n_agents;
  InitialMoments m;
  m.xx = own;
  m.xm = with_mean;
  m.mm = with_mean;
  if (prior == PriorMode::known_mean) {
    m.xa = with_mean;
    m.aa = with_mean;
  }
  return m;
}

CostReport total_delta_j(const RiccatiTables& tables, const ScenarioParams& params, const ValueCoefficients& coeffs,
                         const DelayPenalty& penalty, const Eigen::VectorXd& psi_continuous,
                         const InitialMoments& m, PriorMode prior) {
  const auto& grid = tables.grid;
  const int n = grid.interval_count();
  const double p0 = tables.p(0), alpha0 = tables.alpha(0);
  double noise = 0.0;
  double reveals = 0.0;
  for (int j = n - 1; j >= 0; --j) {
    noise += coeffs.noise_term[sz(j)];
    reveals += coeffs.reveal_term[sz(j)];
  }

  CostReport report;
  report.prior = prior;
  report.v_adjusted = p0 * m.xx + 2.0 * alpha0 * m.xa + coeffs.psi_start[0] * m.aa + coeffs.gamma_start[0];
  report.delta_v = penalty.total;
  report.v_original = report.v_adjusted + report.delta_v;
  report.v_continuous = p0 * m.xx + 2.0 * alpha0 * m.xm + psi_continuous(0) * m.mm + noise_integral(tables, params);
  report.terminal_penalty = penalty.terminal;
  // gamma_0(0) = noise + reveals up to summation order, and the continuous value
  // carries the same noise term, so only the differing pieces are summed.
  report.delta_j = 2.0 * alpha0 * (m.xa - m.xm) + (coeffs.psi_start[0] * m.aa - psi_continuous(0) * m.mm) + reveals +
                   penalty.total;

  report.per_interval.reserve(sz(n));
  for (int j = 0; j < n; ++j) {
    IntervalBreakdown row;
    row.index = j;
    row.t_start = grid.times()(grid.interval_start(j));
    row.t_end = grid.times()(grid.interval_end(j));
    row.psi_start = coeffs.psi_start[sz(j)];
    row.gamma_start = coeffs.gamma_start[sz(j)];
    row.reveal_term = coeffs.reveal_term[sz(j)];
    row.delta_v = penalty.per_interval[sz(j)];
    row.penalty_defined = !(j == 0 && penalty.first_interval_excluded);
    report.per_interval.push_back(row);
  }
  return report;
}

CostReport analytic_report(const RiccatiTables& tables, const ScenarioParams& params, PriorMode prior,
                           const InitialMoments& moments) {
  const ValueCoefficients coeffs = backward_psi_gamma(tables, params);
  const PredictionErrorStats stats = prediction_error_stats(tables, params, prior);
  const DelayPenalty penalty = delay_penalty(tables, params, stats);
  return total_delta_j(tables, params, coeffs, penalty, continuous_psi(tables, params), moments, prior);
}

std::string CostReport::to_json() const {
  nlohmann::ordered_json j;
  j["v_adjusted"] = v_adjusted;
  j["delta_v"] = delta_v;
  j["v_original"] = v_original;
  j["v_continuous"] = v_continuous;
  j["delta_j"] = delta_j;
  j["terminal_penalty"] = terminal_penalty;
  j["prior_mode"] = std::string(to_string(prior));
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : per_interval) {
    nlohmann::ordered_json r;
    r["interval"] = row.index;
    r["t_start"] = row.t_start;
    r["t_end"] = row.t_end;
    r["psi_start"] = row.psi_start;
    r["gamma_start"] = row.gamma_start;
    r["reveal_term"] = row.reveal_term;
    r["delta_v"] = row.delta_v;
    r["penalty_defined"] = row.penalty_defined;
    rows.push_back(std::move(r));
  }
  j["per_interval"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace aggregame
