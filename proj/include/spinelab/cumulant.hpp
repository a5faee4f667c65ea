#pragma once

#include <string>
#include <vector>

#include "spinelab/model.hpp"
#include "spinelab/ode.hpp"
#include "spinelab/spectral.hpp"

namespace spinelab {

/// psi(i, f) with lambda = f(i): the local part acts on f(i), the non-local
/// part on pi(i, f).
double psi(const ModelSpec& spec, int i, const Vector& f);
Vector psi_vector(const ModelSpec& spec, const Vector& f);

/// Linearisation of psi at f in direction g:
///   g(i) (a(i) + int theta (1 - e^{-f(i) theta}) PiL)
///   - pi(i, g) (c(i) + int theta e^{-theta pi(i, f)} PiNL)
double weighted_psi(const ModelSpec& spec, int i, const Vector& f, const Vector& g);
Vector weighted_psi_vector(const ModelSpec& spec, const Vector& f, const Vector& g);

struct CumulantSolution {
  Vector f0;
  std::vector<double> t_grid;
  std::vector<Vector> V;  // V[k] = V_{t_grid[k]} f0
  std::vector<Vector> W;  // weighted moment path, empty unless requested
  OdeStats stats;
};

/// Integrates dV/dt = -psi(V), V(0) = f0, reporting V on an increasing grid.
CumulantSolution solve_V(const ModelSpec& spec, const Vector& f0, const std::vector<double>& t_grid,
                         const OdeOptions& opt = {});

/// Integrates the pair dV/dt = -psi(V), dW/dt = -weighted_psi(V, W) with
/// V(0) = g0 and W(0) = f_weight. W(t) is V^f_t g in the identity
/// E_mu[<f, X_t> e^{-<g, X_t>}] = e^{-<V_t g, mu>} <V^f_t g, mu>.
CumulantSolution solve_weighted_moment(const ModelSpec& spec, const Vector& g0, const Vector& f_weight,
                                       const std::vector<double>& t_grid, const OdeOptions& opt = {});

/// E_mu e^{-<f0, X_t>} = exp(-<V_t f0, mu>)
double laplace_functional(const ModelSpec& spec, const Vector& mu, const Vector& f0, double t,
                          const OdeOptions& opt = {});

/// Laplace functional of X_t under the martingale change of measure:
/// e^{lambda1 t} / <h, mu> * e^{-<V_t g0, mu>} <V^h_t g0, mu>.
double q_measure_laplace(const ModelSpec& spec, const SpectralData& sd, const Vector& mu, const Vector& g0, double t,
                         const OdeOptions& opt = kTightOde);

/// E_{delta_i} <f, X_t> = (e^{A t} f)(i)
Vector mean_semigroup(const SpectralData& sd, const Vector& f, double t);
/// Same quantity by integrating d/dt P_t f = -weighted_psi(0, P_t f).
Vector mean_semigroup_ode(const ModelSpec& spec, const Vector& f, double t, const OdeOptions& opt = {});

enum class Regime { NONDEGENERATE, DEGENERATE_LLOGL, DEGENERATE_SUBCRITICAL, INDETERMINATE };
std::string to_string(Regime r);

struct RegimeClassification {
  Regime regime = Regime::INDETERMINATE;
  double lambda1 = 0.0;
  /// sum_i h_hat_i h_i llogl(PiL(i), h_i) + sum_{gamma(i)>0} h_hat_i pi(i,h) llogl(PiNL(i), pi(i,h))
  double llogl_value = 0.0;
  /// Per-type form: int r log+ r (PiL(i) + PiNL(i))(dr) < inf for every i.
  bool reduced_llogl_finite = true;
  bool unbounded_support = false;  // some type in E1 or E2
  std::vector<std::string> reasons;
};

RegimeClassification classify_regime(const ModelSpec& spec, const SpectralData& sd);

}  // namespace spinelab
