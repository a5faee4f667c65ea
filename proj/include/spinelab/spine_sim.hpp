#pragma once

#include <functional>
#include <vector>

#include "spinelab/forward_sim.hpp"
#include "spinelab/model.hpp"
#include "spinelab/rng.hpp"
#include "spinelab/spectral.hpp"

namespace spinelab {

struct SpineSegment {
  int state;
  double start;
  double end;
};

struct Revival {
  double time;
  int from;
  int to;
  double mark = 0.0;      // Theta_i; may be +inf for LogPareto marks
  double log_mark = 0.0;  // log Theta_i, -inf when Theta_i = 0
};

/// Spine trajectory on [0, horizon]. Segments tile the interval; revivals
/// sit at the boundaries between consecutive segments.
struct SpinePath {
  int initial = 0;
  std::vector<SpineSegment> segments;
  std::vector<Revival> revivals;
  double horizon = 0.0;

  int state_at(double t) const;
};

enum class ImmigrationKind { Discontinuous, Revival };

struct ImmigrationEvent {
  double time;
  ImmigrationKind kind;
  int type;             // spine state (discontinuous) or pre-revival state
  Vector initial;       // theta e_i, or Theta p(i, .)
  double mass;          // theta or Theta
  double log_mass;
};

/// Spine CTMC given by Q_spine, started from h mu / <h, mu>. No revival from a
/// state with q(i) = 0.
SpinePath sample_spine(const SpectralData& sd, const Vector& mu, double T, Rng& rng);

/// Theta for a revival leaving `from`: 0 with probability c/gamma, otherwise a
/// size-biased draw from PiNL(from). Returns log Theta (-inf for 0).
double sample_revival_log_mark(const ModelSpec& spec, const SpectralData& sd, int from, Rng& rng);

/// Fills the revival marks of `spine` in order, then draws discontinuous
/// immigration per segment (Poisson with rate mean PiL(i), uniform times, then
/// size-biased masses). Events are returned sorted by time; zero-mass revivals
/// are kept with an all-zero initial measure.
std::vector<ImmigrationEvent> sample_immigration(const ModelSpec& spec, const SpectralData& sd, SpinePath& spine,
                                                 Rng& rng);

struct GammaRealization {
  SpinePath spine;
  std::vector<ImmigrationEvent> events;
  std::vector<Vector> root;   // X at eval times
  std::vector<Vector> gamma;  // root plus every immigrant started by then
  std::uint64_t n_events = 0; // forward-simulation jumps, root and immigrants
};

/// One realization of the spine decomposition. Draw order on `rng`: spine,
/// revival marks, immigration times, immigration masses, root, immigrants in
/// birth order.
GammaRealization assemble_gamma(const ForwardSimulator& sim, const SpectralData& sd, const Vector& mu, double T,
                                const std::vector<double>& eval_times, Rng& rng);

/// Gamma at eval_times for n_paths independent realizations, laid out like a
/// forward ensemble. Realization p draws from Rng(master_seed, p).
TrajectoryBundle gamma_ensemble(const ForwardSimulator& sim, const SpectralData& sd, const Vector& mu, double T,
                                const std::vector<double>& eval_times, std::size_t n_paths, std::uint64_t master_seed,
                                unsigned threads);

/// E[<f, Gamma_t> | spine, marks, immigration]:
/// <e^{At} f, mu> + sum over events s <= t of <initial_s, e^{A(t-s)} f>.
double conditional_mean_given_G(const SpectralData& sd, const std::vector<ImmigrationEvent>& events, const Vector& mu,
                                const Vector& f, double t);

using RevivalTestFn = std::function<double(double s, int from, int to)>;

/// sum over revivals tau_i <= t of f(tau_i, from_i, to_i)
double revival_sum(const SpinePath& spine, const RevivalTestFn& f, double t);

struct RevivalMomentTargets {
  double first_f = 0.0;
  double first_g = 0.0;
  double cross = 0.0;  // E[S_f S_g]
};

/// Analytic expectations of revival sums for a spine started from
/// initial_law, by composite Gauss-Legendre quadrature over e^{Q s}.
RevivalMomentTargets revival_moment_targets(const SpectralData& sd, const Vector& initial_law, const RevivalTestFn& f,
                                            const RevivalTestFn& g, double t);

/// h mu / <h, mu>
Vector spine_initial_law(const SpectralData& sd, const Vector& mu);

struct MarksSummary {
  bool empty = true;
  std::size_t n_paths = 0;
  std::size_t n_with_marks = 0;
  double median = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
  std::vector<double> per_path;
};

/// Per path: max over marks after burn_in of log+(Lambda_s h(xi_s)) / s and
/// log+(Theta_i pi(xi_{tau-}, h)) / tau_i. Paths without marks score 0.
MarksSummary spine_marks_diagnostic(const ModelSpec& spec, const SpectralData& sd, const std::vector<SpinePath>& spines,
                                    const std::vector<std::vector<ImmigrationEvent>>& events, double burn_in);

}  // namespace spinelab
