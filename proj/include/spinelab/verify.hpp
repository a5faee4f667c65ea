#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinelab/cumulant.hpp"
#include "spinelab/forward_sim.hpp"
#include "spinelab/spectral.hpp"
#include "spinelab/spine_sim.hpp"

namespace spinelab {

/// Pass/fail constants. Every report echoes the values it was judged with.
struct VerifyConfig {
  double z_max = 4.0;
  double median_keep = 0.05;      // NONDEGENERATE: tail medians of W_T / <h,mu> stay above
  double median_collapse = 0.01;  // DEGENERATE: final median below
  double small_fraction = 0.01;   // "W small" means W < small_fraction <h,mu>
  double extinction_level = 0.01; // epsilon in P(X_T(i) > epsilon)
  double extinction_final = 0.05;
  OdeOptions ode = kTightOde;

  nlohmann::json to_json() const;
};

struct Estimate {
  std::string label;
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t n_samples = 0;
  std::optional<double> target;
  std::string note;

  /// (value - target) / se. With se = 0 the score is 0 when the deviation is
  /// within 1e-9 relative (numerical resolution of the targets), else +-inf.
  std::optional<double> z_score() const;
  bool passes(double z_max) const;
};

/// Mean with a batch-means standard error: B = max(30, floor(sqrt(n)))
/// contiguous batches (plain SE when n < 30). Sums are pairwise, so the value
/// does not depend on how the samples were produced.
Estimate estimate_mean(std::span<const double> samples, std::optional<double> target = std::nullopt,
                       std::string label = {});

/// a - b against target 0 with se = sqrt(se_a^2 + se_b^2).
Estimate compare_estimates(const Estimate& a, const Estimate& b, std::string label);

bool all_pass(const std::vector<Estimate>& estimates, double z_max);

/// Per eval time and type: mean of X_t(i) against (mu^T e^{At})_i.
std::vector<Estimate> test_mean(const TrajectoryBundle& bundle, const SpectralData& sd);

/// Per eval time: mean of e^{lambda1 t} <h, X_t> against <h, mu>.
std::vector<Estimate> test_martingale(const TrajectoryBundle& bundle, const SpectralData& sd);

/// Per (f, t): mean of e^{-<f, X_t>} against laplace_functional.
std::vector<Estimate> test_laplace(const TrajectoryBundle& bundle, const ModelSpec& spec,
                                   const std::vector<Vector>& f_panel, const OdeOptions& ode = kTightOde);

/// Per (g, t): spine MC mean of e^{-<g, Gamma_t>}, forward MC mean of
/// e^{-<g, X_t>} W_t / <h, mu>, both against q_measure_laplace, plus the
/// MC-vs-MC difference. Bundles must share eval times and mu.
std::vector<Estimate> test_spine_equivalence(const TrajectoryBundle& forward, const TrajectoryBundle& spine,
                                             const ModelSpec& spec, const SpectralData& sd,
                                             const std::vector<Vector>& g_panel, const OdeOptions& ode = kTightOde);

/// Per eval time: mean of <f, Gamma_t> - E[<f, Gamma_t> | spine, immigration]
/// against 0.
std::vector<Estimate> test_conditional_decomposition(const ForwardSimulator& sim, const SpectralData& sd,
                                                     const Vector& mu, const Vector& f,
                                                     const std::vector<double>& eval_times, std::size_t n_paths,
                                                     std::uint64_t seed, unsigned threads);

/// Revival sums S_f, S_g up to t over spines started from h mu / <h, mu>:
/// E S_f, E S_g, E S_f S_g against quadrature targets.
std::vector<Estimate> test_revival_moments(const SpectralData& sd, const Vector& mu, const RevivalTestFn& f,
                                           const RevivalTestFn& g, double t, std::size_t n_paths,
                                           std::uint64_t seed, unsigned threads);

enum class EmpiricalVerdict { NONDEGENERATE, DEGENERATE, INCONCLUSIVE };
std::string to_string(EmpiricalVerdict v);

struct RegimeRung {
  double T = 0.0;
  double mean = 0.0;          // over uncensored paths
  double standard_error = 0.0;
  double median_ratio = 0.0;  // median(W_T) / <h, mu>, censored paths counted as +inf
  double small_fraction = 0.0;
  double extinct_fraction = 0.0;
  std::size_t censored = 0;
};

struct RegimeReport {
  RegimeClassification classification;
  double target = 0.0;  // <h, mu>
  std::vector<RegimeRung> rungs;
  EmpiricalVerdict verdict = EmpiricalVerdict::INCONCLUSIVE;
  bool consistent = false;
  std::string note;

  nlohmann::json to_json() const;
};

/// Verdict from a W^h_T ladder (tail = second half of the ladder):
///   NONDEGENERATE when every tail median ratio is >= median_keep;
///   DEGENERATE when the final median ratio is < median_collapse and either
///   the mean is within z_max SE of <h, mu> or at least half the paths are
///   below small_fraction <h, mu>;
///   otherwise INCONCLUSIVE.
EmpiricalVerdict regime_verdict(const std::vector<RegimeRung>& rungs, double target, const VerifyConfig& cfg);

/// Paths that hit the event cap are censored: they enter medians and small
/// fractions as +inf and are left out of the mean.
RegimeReport kesten_stigum_experiment(const ForwardSimulator& sim, const SpectralData& sd, const Vector& mu,
                                      const std::vector<double>& T_ladder, std::size_t n_paths, std::uint64_t seed,
                                      unsigned threads, const VerifyConfig& cfg = {});

struct ExtinctionSeries {
  int type = 0;
  std::vector<double> fraction;  // P(X_T(type) > epsilon) per rung
  std::vector<double> standard_error;
  bool non_increasing = false;
  bool final_below = false;
};

struct ExtinctionReport {
  bool applicable = false;  // lambda1 > 0 only
  std::vector<double> T_ladder;
  double epsilon = 0.0;
  std::vector<ExtinctionSeries> series;
  bool passes() const;

  nlohmann::json to_json() const;
};

/// Uses the eval times of `bundle` as the ladder; censored paths count as
/// above epsilon. Tail monotonicity allows z_max combined SE of slack.
ExtinctionReport weak_extinction_test(const TrajectoryBundle& bundle, const SpectralData& sd,
                                      const VerifyConfig& cfg = {});

struct SuiteOptions {
  Vector mu;
  std::vector<double> eval_times{0.5, 1.0, 2.0};
  std::size_t n_paths = 100'000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  VerifyConfig config{};
};

struct SuiteReport {
  std::vector<Estimate> estimates;
  std::vector<std::string> sections;  // section name per estimate
  bool pass = false;
  nlohmann::json to_json(double z_max) const;
};

/// Mean, martingale, Laplace panel, spine equivalence, conditional
/// decomposition and revival moments on one spec. Test functions are drawn
/// from the seed.
SuiteReport run_suite(const ModelSpec& spec, const SpectralData& sd, const SuiteOptions& opt);

}  // namespace spinelab
