#include "spinelab/cumulant.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "spinelab/error.hpp"

namespace spinelab {
namespace {

// Jump integrals need non-negative arguments; the solver can undershoot 0 by
// round-off when V decays to zero.
double clamp0(double x) { return x > 0.0 ? x : 0.0; }

void check_grid(const std::vector<double>& grid) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0)) throw NumericalError("time grid must be non-negative");
    if (k > 0 && grid[k] < grid[k - 1]) throw NumericalError("time grid must be increasing");
  }
}

}  // namespace

double psi(const ModelSpec& spec, int i, const Vector& f) {
  const double lambda = f[i];
  const double pf = spec.pi.row(i).dot(f);
  double value = spec.a[i] * lambda - spec.c[i] * pf;
  if (spec.piL[i]) value += spec.piL[i]->compensated_laplace(clamp0(lambda));
  if (spec.piNL[i]) value -= spec.piNL[i]->laplace_deficit(clamp0(pf));
  return value;
}

Vector psi_vector(const ModelSpec& spec, const Vector& f) {
  Vector out(spec.K);
  for (int i = 0; i < spec.K; ++i) out[i] = psi(spec, i, f);
  return out;
}

double weighted_psi(const ModelSpec& spec, int i, const Vector& f, const Vector& g) {
  double local = spec.a[i];
  if (spec.piL[i]) local += spec.piL[i]->size_weighted_deficit(clamp0(f[i]));
  double nonlocal = spec.c[i];
  if (spec.piNL[i]) nonlocal += spec.piNL[i]->tilted_mean(clamp0(spec.pi.row(i).dot(f)));
  return g[i] * local - spec.pi.row(i).dot(g) * nonlocal;
}

Vector weighted_psi_vector(const ModelSpec& spec, const Vector& f, const Vector& g) {
  Vector out(spec.K);
  for (int i = 0; i < spec.K; ++i) out[i] = weighted_psi(spec, i, f, g);
  return out;
}

CumulantSolution solve_V(const ModelSpec& spec, const Vector& f0, const std::vector<double>& t_grid,
                         const OdeOptions& opt) {
  check_grid(t_grid);
  if ((f0.array() < 0.0).any()) throw NumericalError("solve_V: f0 must be non-negative");
  CumulantSolution sol;
  sol.f0 = f0;
  sol.t_grid = t_grid;
  Vector y = f0;
  double t = 0.0, step = 0.0;
  auto rhs = [&](double, const Vector& v) -> Vector { return -psi_vector(spec, v); };
  for (double target : t_grid) {
    dormand_prince(rhs, y, t, target, opt, sol.stats, step);
    t = std::max(t, target);
    sol.V.push_back(y);
  }
  return sol;
}

CumulantSolution solve_weighted_moment(const ModelSpec& spec, const Vector& g0, const Vector& f_weight,
                                       const std::vector<double>& t_grid, const OdeOptions& opt) {
  check_grid(t_grid);
  if ((g0.array() < 0.0).any()) throw NumericalError("solve_weighted_moment: g0 must be non-negative");
  const int K = spec.K;
  CumulantSolution sol;
  sol.f0 = g0;
  sol.t_grid = t_grid;
  Vector y(2 * K);
  y << g0, f_weight;
  double t = 0.0, step = 0.0;
  auto rhs = [&](double, const Vector& state) -> Vector {
    const Vector v = state.head(K);
    const Vector w = state.tail(K);
    Vector out(2 * K);
    out << -psi_vector(spec, v), -weighted_psi_vector(spec, v, w);
    return out;
  };
  for (double target : t_grid) {
    dormand_prince(rhs, y, t, target, opt, sol.stats, step);
    t = std::max(t, target);
    sol.V.push_back(y.head(K));
    sol.W.push_back(y.tail(K));
  }
  return sol;
}

double laplace_functional(const ModelSpec& spec, const Vector& mu, const Vector& f0, double t, const OdeOptions& opt) {
  if ((mu.array() < 0.0).any()) throw NumericalError("laplace_functional: mu must be non-negative");
  const auto sol = solve_V(spec, f0, {t}, opt);
  return std::exp(-sol.V.back().dot(mu));
}

double q_measure_laplace(const ModelSpec& spec, const SpectralData& sd, const Vector& mu, const Vector& g0, double t,
                         const OdeOptions& opt) {
  const double mass = sd.h.dot(mu);
  if (!(mass > 0.0)) throw NumericalError("q_measure_laplace: <h, mu> must be positive");
  const auto sol = solve_weighted_moment(spec, g0, sd.h, {t}, opt);
  return std::exp(sd.lambda1 * t) / mass * std::exp(-sol.V.back().dot(mu)) * sol.W.back().dot(mu);
}

Vector mean_semigroup(const SpectralData& sd, const Vector& f, double t) { return mean_matrix(sd, t) * f; }

Vector mean_semigroup_ode(const ModelSpec& spec, const Vector& f, double t, const OdeOptions& opt) {
  const Vector zero = Vector::Zero(spec.K);
  Vector y = f;
  OdeStats stats;
  double step = 0.0;
  auto rhs = [&](double, const Vector& w) -> Vector { return -weighted_psi_vector(spec, zero, w); };
  dormand_prince(rhs, y, 0.0, t, opt, stats, step);
  return y;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::NONDEGENERATE: return "NONDEGENERATE";
    case Regime::DEGENERATE_LLOGL: return "DEGENERATE_LLOGL";
    case Regime::DEGENERATE_SUBCRITICAL: return "DEGENERATE_SUBCRITICAL";
    case Regime::INDETERMINATE: return "INDETERMINATE";
  }
  return "UNKNOWN";
}

RegimeClassification classify_regime(const ModelSpec& spec, const SpectralData& sd) {
  RegimeClassification out;
  out.lambda1 = sd.lambda1;
  const double inf = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (int i = 0; i < spec.K; ++i) {
    if (spec.piL[i]) {
      total += sd.h_hat[i] * sd.h[i] * spec.piL[i]->llogl_moment(sd.h[i]);
      if (spec.piL[i]->unbounded_support()) out.unbounded_support = true;
      if (!std::isfinite(spec.piL[i]->llogl_moment(1.0))) out.reduced_llogl_finite = false;
    }
    if (spec.piNL[i] && sd.gamma[i] > 0.0) {
      const double ph = spec.pi.row(i).dot(sd.h);
      total += sd.h_hat[i] * ph * spec.piNL[i]->llogl_moment(ph);
      if (spec.piNL[i]->unbounded_support()) out.unbounded_support = true;
    }
    if (spec.piNL[i] && !std::isfinite(spec.piNL[i]->llogl_moment(1.0))) out.reduced_llogl_finite = false;
  }
  out.llogl_value = std::isfinite(total) ? total : inf;
  const bool llogl_finite = std::isfinite(out.llogl_value);

  // |lambda1| below this is treated as critical.
  constexpr double kCritical = 1e-12;
  std::ostringstream os;
  os << "lambda1 = " << sd.lambda1;
  out.reasons.push_back(os.str());
  out.reasons.push_back(llogl_finite ? "L log L sum finite" : "L log L sum infinite");
  if (sd.lambda1 < -kCritical) {
    out.regime = llogl_finite ? Regime::NONDEGENERATE : Regime::DEGENERATE_LLOGL;
    out.reasons.push_back(llogl_finite ? "lambda1 < 0 with finite L log L: limit non-degenerate"
                                       : "infinite L log L: limit is 0 almost surely");
  } else if (out.unbounded_support) {
    out.regime = Regime::DEGENERATE_SUBCRITICAL;
    out.reasons.push_back("lambda1 >= 0 and a jump measure has support containing a ray");
  } else if (sd.lambda1 > kCritical) {
    // Bounded supports give finite L log L, and lambda1 > 0 then forces W = 0.
    out.regime = Regime::DEGENERATE_SUBCRITICAL;
    out.reasons.push_back("lambda1 > 0 with finite L log L: limit is 0 almost surely");
  } else {
    out.regime = Regime::INDETERMINATE;
    out.reasons.push_back("critical lambda1 = 0 with bounded jump supports: no verdict");
  }
  return out;
}

}  // namespace spinelab
