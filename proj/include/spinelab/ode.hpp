#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "spinelab/error.hpp"
#include "spinelab/linalg.hpp"

namespace spinelab {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double min_step = 1e-14;
  std::size_t max_steps = 10'000'000;
};

/// For identities checked near machine precision (martingale normalisation).
inline constexpr OdeOptions kTightOde{1e-14, 1e-12, 1e-16, 10'000'000};

struct OdeStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) integration of y' = rhs(t, y) from t0 to t1
/// (odeint controlled stepper), landing exactly on t1. `step` carries the
/// step-size guess between calls.
template <typename Rhs>
void dormand_prince(Rhs&& rhs, Vector& y, double t0, double t1, const OdeOptions& opt, OdeStats& stats,
                    double& step) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  if (t1 <= t0) return;
  const auto n = static_cast<std::size_t>(y.size());
  auto system = [&](const State& x, State& dxdt, double t) {
    const Vector out = rhs(t, Eigen::Map<const Vector>(x.data(), y.size()));
    dxdt.assign(out.data(), out.data() + n);
  };
  auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
  State x(y.data(), y.data() + n);
  if (!(step > 0.0)) step = std::min(1e-3, t1 - t0);
  double t = t0;
  while (t < t1) {
    if (stats.steps + stats.rejected >= opt.max_steps) throw NumericalError("ode: step budget exhausted");
    const bool last = t + step >= t1;
    double dt = last ? t1 - t : step;
    const double before = t;
    if (stepper.try_step(system, x, t, dt) == odeint::success) {
      ++stats.steps;
      if (last) t = t1;
      // A shortened final step says nothing about the step the solution allows.
      if (!last || dt < t - before) step = dt;
    } else {
      ++stats.rejected;
      step = dt;
      if (step < opt.min_step) throw NumericalError("ode: step size underflow (stiff input?)");
    }
  }
  y = Eigen::Map<const Vector>(x.data(), y.size());
}

}  // namespace spinelab
