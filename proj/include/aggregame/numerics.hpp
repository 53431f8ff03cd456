#pragma once

// Fixed-step integration and quadrature kernels shared by the solvers.
// Everything here is a template over Eigen dense types or scalars so the
// same code drives the scalar p solve, the coupled (p, alpha) solve and the
// (p, alpha, psi) continuous-observation solve.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

namespace aggregame::numerics {

/// One classical RK4 step of size `dt` (negative for backward steps) for
/// y' = f(t, y). `State` is a scalar or a fixed-size Eigen vector.
template <typename State, typename Field, typename Scalar>
State rk4_step(const Field& f, Scalar t, const State& y, Scalar dt) {
  const Scalar half = dt / Scalar(2);
  const State k1 = f(t, y);
  const State k2 = f(t + half, State(y + half * k1));
  const State k3 = f(t + half, State(y + half * k2));
  const State k4 = f(t + dt, State(y + dt * k3));
  return State(y + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4));
}

/// Composite trapezoid over consecutive nodes [first, last] of (t, v).
template <typename DerivedT, typename DerivedV>
typename DerivedV::Scalar trapezoid(const Eigen::DenseBase<DerivedT>& t,
                                    const Eigen::DenseBase<DerivedV>& v,
                                    Eigen::Index first, Eigen::Index last) {
  using Scalar = typename DerivedV::Scalar;
  Scalar acc(0);
  for (Eigen::Index k = first; k < last; ++k) {
    acc += Scalar(0.5) * (v(k) + v(k + 1)) * (t(k + 1) - t(k));
  }
  return acc;
}

/// Running trapezoid integral: out(k) = int_{t(0)}^{t(k)} v.
template <typename DerivedT, typename DerivedV>
Eigen::Matrix<typename DerivedV::Scalar, Eigen::Dynamic, 1> cumulative_trapezoid(
    const Eigen::DenseBase<DerivedT>& t, const Eigen::DenseBase<DerivedV>& v) {
  using Scalar = typename DerivedV::Scalar;
  const Eigen::Index size = v.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(size);
  if (size == 0) return out;
  out(0) = Scalar(0);
  for (Eigen::Index k = 1; k < size; ++k) {
    out(k) = out(k - 1) + Scalar(0.5) * (v(k - 1) + v(k)) * (t(k) - t(k - 1));
  }
  return out;
}

/// True when every coefficient is finite and below `guard` in magnitude.
template <typename Derived>
bool all_bounded(const Eigen::DenseBase<Derived>& v, double guard) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double x = static_cast<double>(v(k));
    if (!std::isfinite(x) || std::abs(x) > guard) return false;
  }
  return true;
}

inline bool bounded(double x, double guard) { return std::isfinite(x) && std::abs(x) <= guard; }

}  // namespace aggregame::numerics
