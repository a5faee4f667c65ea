#include "spinelab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinelab/error.hpp"
#include "spinelab/kernels/kernels.hpp"
#include "spinelab/parallel.hpp"

namespace spinelab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Agreement threshold for zero-variance statistics against numerically
// evaluated targets.
constexpr double kExactResolution = 1e-9;
constexpr const char* kIndependentNote = "independent seeds; no variance reduction";
constexpr const char* kHeuristicNote =
    "finite-T heuristic: W at a T ladder can exhibit the trend of the a.s. limit but does not certify it";

std::string fmt_time(double t) {
  nlohmann::json j = t;
  return j.dump();
}

// <w, X> for every path of one eval block.
std::vector<double> pairings(const Matrix& block, const Vector& w) {
  std::vector<double> out(static_cast<std::size_t>(block.rows()));
  kernels::weighted_rows(block.data(), out.size(), static_cast<std::size_t>(block.cols()), w.data(), out.data());
  return out;
}

double median_of(std::vector<double> x) {
  if (x.empty()) return 0.0;
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + mid, x.end());
  const double hi = x[mid];
  if (x.size() % 2 == 1) return hi;
  const double lo = *std::max_element(x.begin(), x.begin() + mid);
  return 0.5 * (lo + hi);
}

double sum_of(std::span<const double> x) { return kernels::pairwise_sum(x); }

}  // namespace

nlohmann::json VerifyConfig::to_json() const {
  return {{"z_max", z_max},
          {"median_keep", median_keep},
          {"median_collapse", median_collapse},
          {"small_fraction", small_fraction},
          {"extinction_level", extinction_level},
          {"extinction_final", extinction_final},
          {"ode_abs_tol", ode.abs_tol},
          {"ode_rel_tol", ode.rel_tol}};
}

std::optional<double> Estimate::z_score() const {
  if (!target) return std::nullopt;
  const double dev = value - *target;
  if (standard_error > 0.0) return dev / standard_error;
  if (std::abs(dev) <= kExactResolution * std::max(1.0, std::abs(*target))) return 0.0;
  return dev > 0.0 ? kInf : -kInf;
}

bool Estimate::passes(double z_max) const {
  const auto z = z_score();
  return z && std::abs(*z) <= z_max;
}

Estimate estimate_mean(std::span<const double> samples, std::optional<double> target, std::string label) {
  Estimate e;
  e.label = std::move(label);
  e.target = target;
  e.n_samples = samples.size();
  const std::size_t n = samples.size();
  if (n == 0) return e;
  e.value = sum_of(samples) / static_cast<double>(n);
  if (n < 2) return e;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it) return e;  // constant samples: no rounding noise in the SE
  const std::size_t batches = n < 30 ? n : std::max<std::size_t>(30, static_cast<std::size_t>(std::sqrt(double(n))));
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches;
    const std::size_t hi = (b + 1) * n / batches;
    means[b] = sum_of(samples.subspan(lo, hi - lo)) / static_cast<double>(hi - lo);
  }
  const double grand = sum_of(means) / static_cast<double>(batches);
  std::vector<double> sq(batches);
  for (std::size_t b = 0; b < batches; ++b) sq[b] = (means[b] - grand) * (means[b] - grand);
  const double var = sum_of(sq) / static_cast<double>(batches - 1);
  e.standard_error = std::sqrt(var / static_cast<double>(batches));
  return e;
}

Estimate compare_estimates(const Estimate& a, const Estimate& b, std::string label) {
  Estimate e;
  e.label = std::move(label);
  e.value = a.value - b.value;
  e.standard_error = std::hypot(a.standard_error, b.standard_error);
  e.n_samples = std::min(a.n_samples, b.n_samples);
  e.target = 0.0;
  e.note = kIndependentNote;
  return e;
}

bool all_pass(const std::vector<Estimate>& estimates, double z_max) {
  return std::all_of(estimates.begin(), estimates.end(), [&](const Estimate& e) { return e.passes(z_max); });
}

std::vector<Estimate> test_mean(const TrajectoryBundle& bundle, const SpectralData& sd) {
  std::vector<Estimate> out;
  for (std::size_t e = 0; e < bundle.eval_times.size(); ++e) {
    const double t = bundle.eval_times[e];
    const Vector target = (bundle.mu0.transpose() * mean_matrix(sd, t)).transpose();
    const Matrix& block = bundle.masses[e];
    for (int i = 0; i < bundle.K; ++i) {
      const std::span<const double> col(block.col(i).data(), bundle.n_paths);
      out.push_back(estimate_mean(col, target[i], "mean X_" + std::to_string(i + 1) + " t=" + fmt_time(t)));
    }
  }
  return out;
}

std::vector<Estimate> test_martingale(const TrajectoryBundle& bundle, const SpectralData& sd) {
  std::vector<Estimate> out;
  const double target = sd.h.dot(bundle.mu0);
  for (std::size_t e = 0; e < bundle.eval_times.size(); ++e) {
    const double t = bundle.eval_times[e];
    std::vector<double> w = pairings(bundle.masses[e], sd.h);
    const double scale = std::exp(sd.lambda1 * t);
    for (double& x : w) x *= scale;
    out.push_back(estimate_mean(w, target, "martingale W_t t=" + fmt_time(t)));
  }
  return out;
}

std::vector<Estimate> test_laplace(const TrajectoryBundle& bundle, const ModelSpec& spec,
                                   const std::vector<Vector>& f_panel, const OdeOptions& ode) {
  std::vector<Estimate> out;
  for (std::size_t k = 0; k < f_panel.size(); ++k) {
    const CumulantSolution sol = solve_V(spec, f_panel[k], bundle.eval_times, ode);
    for (std::size_t e = 0; e < bundle.eval_times.size(); ++e) {
      std::vector<double> x = pairings(bundle.masses[e], f_panel[k]);
      for (double& v : x) v = std::exp(-v);
      const double target = std::exp(-sol.V[e].dot(bundle.mu0));
      out.push_back(estimate_mean(x, target,
                                  "laplace f" + std::to_string(k + 1) + " t=" + fmt_time(bundle.eval_times[e])));
    }
  }
  return out;
}

std::vector<Estimate> test_spine_equivalence(const TrajectoryBundle& forward, const TrajectoryBundle& spine,
                                             const ModelSpec& spec, const SpectralData& sd,
                                             const std::vector<Vector>& g_panel, const OdeOptions& ode) {
  if (forward.eval_times != spine.eval_times) throw SpecError("spine and forward bundles need the same eval times");
  std::vector<Estimate> out;
  const double mass = sd.h.dot(forward.mu0);
  for (std::size_t k = 0; k < g_panel.size(); ++k) {
    const std::string tag = "g" + std::to_string(k + 1);
    for (std::size_t e = 0; e < forward.eval_times.size(); ++e) {
      const double t = forward.eval_times[e];
      const std::string where = tag + " t=" + fmt_time(t);
      const double target = q_measure_laplace(spec, sd, forward.mu0, g_panel[k], t, ode);

      std::vector<double> s = pairings(spine.masses[e], g_panel[k]);
      for (double& v : s) v = std::exp(-v);
      Estimate spine_est = estimate_mean(s, target, "spine " + where);

      std::vector<double> gx = pairings(forward.masses[e], g_panel[k]);
      const std::vector<double> hx = pairings(forward.masses[e], sd.h);
      const double scale = std::exp(sd.lambda1 * t) / mass;
      for (std::size_t p = 0; p < gx.size(); ++p) gx[p] = std::exp(-gx[p]) * hx[p] * scale;
      Estimate fwd_est = estimate_mean(gx, target, "reweighted forward " + where);

      out.push_back(spine_est);
      out.push_back(fwd_est);
      out.push_back(compare_estimates(spine_est, fwd_est, "spine - forward " + where));
    }
  }
  return out;
}

std::vector<Estimate> test_conditional_decomposition(const ForwardSimulator& sim, const SpectralData& sd,
                                                     const Vector& mu, const Vector& f,
                                                     const std::vector<double>& eval_times, std::size_t n_paths,
                                                     std::uint64_t seed, unsigned threads) {
  const double T = eval_times.empty() ? 0.0 : eval_times.back();
  const std::size_t n_t = eval_times.size();
  std::vector<double> residual(n_t * n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    Rng rng(seed, p);
    const GammaRealization g = assemble_gamma(sim, sd, mu, T, eval_times, rng);
    for (std::size_t e = 0; e < n_t; ++e)
      residual[e * n_paths + p] = g.gamma[e].dot(f) - conditional_mean_given_G(sd, g.events, mu, f, eval_times[e]);
  });
  std::vector<Estimate> out;
  for (std::size_t e = 0; e < n_t; ++e)
    out.push_back(estimate_mean(std::span<const double>(residual).subspan(e * n_paths, n_paths), 0.0,
                                "decomposition residual t=" + fmt_time(eval_times[e])));
  return out;
}

std::vector<Estimate> test_revival_moments(const SpectralData& sd, const Vector& mu, const RevivalTestFn& f,
                                           const RevivalTestFn& g, double t, std::size_t n_paths,
                                           std::uint64_t seed, unsigned threads) {
  std::vector<double> sf(n_paths), sg(n_paths), sfg(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    Rng rng(seed, p);
    const SpinePath spine = sample_spine(sd, mu, t, rng);
    sf[p] = revival_sum(spine, f, t);
    sg[p] = revival_sum(spine, g, t);
    sfg[p] = sf[p] * sg[p];
  });
  const RevivalMomentTargets target = revival_moment_targets(sd, spine_initial_law(sd, mu), f, g, t);
  const std::string at = " t=" + fmt_time(t);
  return {estimate_mean(sf, target.first_f, "revival E[S_f]" + at),
          estimate_mean(sg, target.first_g, "revival E[S_g]" + at),
          estimate_mean(sfg, target.cross, "revival E[S_f S_g]" + at)};
}

std::string to_string(EmpiricalVerdict v) {
  switch (v) {
    case EmpiricalVerdict::NONDEGENERATE: return "NONDEGENERATE";
    case EmpiricalVerdict::DEGENERATE: return "DEGENERATE";
    case EmpiricalVerdict::INCONCLUSIVE: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

EmpiricalVerdict regime_verdict(const std::vector<RegimeRung>& rungs, double target, const VerifyConfig& cfg) {
  if (rungs.empty()) return EmpiricalVerdict::INCONCLUSIVE;
  const std::size_t tail = rungs.size() / 2;
  bool keeps = true;
  for (std::size_t k = tail; k < rungs.size(); ++k) keeps = keeps && rungs[k].median_ratio >= cfg.median_keep;
  if (keeps) return EmpiricalVerdict::NONDEGENERATE;
  const RegimeRung& last = rungs.back();
  if (last.median_ratio < cfg.median_collapse) {
    const bool mean_held = std::abs(last.mean - target) <= cfg.z_max * last.standard_error;
    if (mean_held || last.small_fraction >= 0.5) return EmpiricalVerdict::DEGENERATE;
  }
  return EmpiricalVerdict::INCONCLUSIVE;
}

RegimeReport kesten_stigum_experiment(const ForwardSimulator& sim, const SpectralData& sd, const Vector& mu,
                                      const std::vector<double>& T_ladder, std::size_t n_paths, std::uint64_t seed,
                                      unsigned threads, const VerifyConfig& cfg) {
  if (T_ladder.empty() || !std::is_sorted(T_ladder.begin(), T_ladder.end()))
    throw SpecError("T ladder must be non-empty and increasing");
  RegimeReport report;
  report.classification = classify_regime(sim.spec(), sd);
  report.target = sd.h.dot(mu);
  if (!(report.target > 0.0)) throw SpecError("experiment needs <h, mu> > 0");
  report.note = kHeuristicNote;

  const TrajectoryBundle bundle =
      ensemble(sim, mu, T_ladder.back(), T_ladder, n_paths, seed, threads, CapPolicy::Censor);
  for (std::size_t e = 0; e < T_ladder.size(); ++e) {
    const double T = T_ladder[e];
    RegimeRung rung;
    rung.T = T;
    const std::vector<double> hx = pairings(bundle.masses[e], sd.h);
    const double scale = std::exp(sd.lambda1 * T);
    std::vector<double> w(n_paths), kept;
    std::size_t small = 0, extinct = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const bool censored = bundle.censored_at[p] <= T || std::isnan(hx[p]);
      w[p] = censored ? kInf : hx[p] * scale;
      if (censored) {
        ++rung.censored;
        continue;
      }
      kept.push_back(w[p]);
      if (w[p] < cfg.small_fraction * report.target) ++small;
      if (hx[p] == 0.0) ++extinct;
    }
    const Estimate m = estimate_mean(kept, report.target);
    rung.mean = m.value;
    rung.standard_error = m.standard_error;
    rung.median_ratio = median_of(w) / report.target;
    rung.small_fraction = static_cast<double>(small) / static_cast<double>(n_paths);
    rung.extinct_fraction = static_cast<double>(extinct) / static_cast<double>(n_paths);
    report.rungs.push_back(rung);
  }
  report.verdict = regime_verdict(report.rungs, report.target, cfg);
  const Regime r = report.classification.regime;
  switch (report.verdict) {
    case EmpiricalVerdict::NONDEGENERATE: report.consistent = r == Regime::NONDEGENERATE; break;
    case EmpiricalVerdict::DEGENERATE:
      report.consistent = r == Regime::DEGENERATE_LLOGL || r == Regime::DEGENERATE_SUBCRITICAL;
      break;
    case EmpiricalVerdict::INCONCLUSIVE: report.consistent = false; break;
  }
  return report;
}

nlohmann::json RegimeReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rungs) {
    rows.push_back({{"T", r.T},
                    {"mean", r.mean},
                    {"se", r.standard_error},
                    {"median_ratio",
                     std::isinf(r.median_ratio) ? nlohmann::json("inf") : nlohmann::json(r.median_ratio)},
                    {"small_fraction", r.small_fraction},
                    {"extinct_fraction", r.extinct_fraction},
                    {"censored", r.censored}});
  }
  nlohmann::json llogl = std::isinf(classification.llogl_value) ? nlohmann::json("inf")
                                                                 : nlohmann::json(classification.llogl_value);
  return {{"classification", to_string(classification.regime)},
          {"lambda1", classification.lambda1},
          {"llogl", llogl},
          {"reasons", classification.reasons},
          {"target", target},
          {"rungs", rows},
          {"verdict", to_string(verdict)},
          {"consistent", consistent},
          {"note", note}};
}

bool ExtinctionReport::passes() const {
  if (!applicable) return false;
  return std::all_of(series.begin(), series.end(),
                     [](const ExtinctionSeries& s) { return s.non_increasing && s.final_below; });
}

ExtinctionReport weak_extinction_test(const TrajectoryBundle& bundle, const SpectralData& sd,
                                      const VerifyConfig& cfg) {
  ExtinctionReport report;
  report.T_ladder = bundle.eval_times;
  report.epsilon = cfg.extinction_level;
  report.applicable = sd.lambda1 > 0.0;
  if (!report.applicable) return report;
  const double n = static_cast<double>(bundle.n_paths);
  for (int i = 0; i < bundle.K; ++i) {
    ExtinctionSeries s;
    s.type = i;
    for (std::size_t e = 0; e < bundle.eval_times.size(); ++e) {
      std::size_t above = 0;
      for (std::size_t p = 0; p < bundle.n_paths; ++p) {
        const double x = bundle.masses[e](static_cast<Eigen::Index>(p), i);
        if (std::isnan(x) || x > cfg.extinction_level) ++above;
      }
      const double frac = static_cast<double>(above) / n;
      s.fraction.push_back(frac);
      s.standard_error.push_back(std::sqrt(frac * (1.0 - frac) / n));
    }
    s.non_increasing = true;
    for (std::size_t e = s.fraction.size() / 2; e + 1 < s.fraction.size(); ++e) {
      const double slack = cfg.z_max * std::hypot(s.standard_error[e], s.standard_error[e + 1]);
      s.non_increasing = s.non_increasing && s.fraction[e + 1] <= s.fraction[e] + slack;
    }
    s.final_below = !s.fraction.empty() && s.fraction.back() <= cfg.extinction_final;
    report.series.push_back(std::move(s));
  }
  return report;
}

nlohmann::json ExtinctionReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : series)
    rows.push_back({{"type", s.type + 1},
                    {"fraction", s.fraction},
                    {"se", s.standard_error},
                    {"non_increasing", s.non_increasing},
                    {"final_below", s.final_below}});
  return {{"applicable", applicable}, {"T", T_ladder}, {"epsilon", epsilon}, {"series", rows}, {"pass", passes()}};
}

nlohmann::json SuiteReport::to_json(double z_max) const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const Estimate& e = estimates[k];
    const auto z = e.z_score();
    nlohmann::json row = {{"section", sections[k]},
                          {"test", e.label},
                          {"statistic", e.value},
                          {"target", e.target ? nlohmann::json(*e.target) : nlohmann::json(nullptr)},
                          {"se", e.standard_error},
                          {"n", e.n_samples},
                          {"z", z && std::isfinite(*z) ? nlohmann::json(*z) : nlohmann::json(nullptr)},
                          {"pass", e.passes(z_max)}};
    if (!e.note.empty()) row["note"] = e.note;
    rows.push_back(std::move(row));
  }
  return rows;
}

SuiteReport run_suite(const ModelSpec& spec, const SpectralData& sd, const SuiteOptions& opt) {
  const int K = spec.K;
  if (opt.mu.size() != K) throw SpecError("mu has the wrong length");
  if (opt.eval_times.empty()) throw SpecError("suite needs eval times");
  const double T = opt.eval_times.back();
  Rng panel_rng(splitmix64(opt.seed ^ 0x70616e656cULL), 0);
  auto random_f = [&](double scale) {
    Vector f(K);
    for (int i = 0; i < K; ++i) f[i] = scale * panel_rng.uniform();
    return f;
  };
  std::vector<Vector> f_panel;
  for (int k = 0; k < 5; ++k) f_panel.push_back(random_f(2.0));
  std::vector<Vector> g_panel;
  for (int k = 0; k < 3; ++k) g_panel.push_back(random_f(1.5));
  const Vector f_decomp = random_f(1.0) + Vector::Ones(K);

  const ForwardSimulator sim(spec);
  SuiteReport report;
  auto add = [&](const std::string& section, const std::vector<Estimate>& ests) {
    for (const auto& e : ests) {
      report.estimates.push_back(e);
      report.sections.push_back(section);
    }
  };
  const TrajectoryBundle fwd = ensemble(sim, opt.mu, T, opt.eval_times, opt.n_paths, opt.seed, opt.threads);
  add("mean", test_mean(fwd, sd));
  add("martingale", test_martingale(fwd, sd));
  add("laplace", test_laplace(fwd, spec, f_panel, opt.config.ode));

  const TrajectoryBundle gam =
      gamma_ensemble(sim, sd, opt.mu, T, opt.eval_times, opt.n_paths, splitmix64(opt.seed + 1), opt.threads);
  add("spine_equivalence", test_spine_equivalence(fwd, gam, spec, sd, g_panel, opt.config.ode));
  add("decomposition", test_conditional_decomposition(sim, sd, opt.mu, f_decomp, opt.eval_times,
                                                      std::max<std::size_t>(opt.n_paths / 10, 1000),
                                                      splitmix64(opt.seed + 2), opt.threads));

  const RevivalTestFn ones = [](double, int, int) { return 1.0; };
  const RevivalTestFn shaped = [K](double s, int i, int j) {
    return std::exp(-0.5 * s) * (1.0 + static_cast<double>(i + 2 * j) / K);
  };
  add("revival_moments",
      test_revival_moments(sd, opt.mu, ones, shaped, T, opt.n_paths, splitmix64(opt.seed + 3), opt.threads));
  report.pass = all_pass(report.estimates, opt.config.z_max);
  return report;
}

}  // namespace spinelab
