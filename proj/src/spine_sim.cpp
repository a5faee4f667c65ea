#include "spinelab/spine_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinelab/error.hpp"
#include "spinelab/parallel.hpp"
#include "spinelab/quadrature.hpp"

namespace spinelab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Immigrants born this close to the horizon contribute their initial measure.
constexpr double kHorizonSlack = 1e-12;

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

int SpinePath::state_at(double t) const {
  for (const auto& seg : segments)
    if (t < seg.end) return seg.state;
  return segments.empty() ? initial : segments.back().state;
}

Vector spine_initial_law(const SpectralData& sd, const Vector& mu) {
  const double mass = sd.h.dot(mu);
  if (!(mass > 0.0)) throw SpecError("spine needs <h, mu> > 0");
  return sd.h.cwiseProduct(mu) / mass;
}

SpinePath sample_spine(const SpectralData& sd, const Vector& mu, double T, Rng& rng) {
  const Vector law = spine_initial_law(sd, mu);
  SpinePath path;
  path.horizon = T;
  path.initial = static_cast<int>(rng.categorical(law, law.sum()));
  int state = path.initial;
  double t = 0.0;
  const int K = sd.types();
  Vector row(K);
  for (;;) {
    const double rate = sd.q[state];
    if (!(rate > 0.0)) {
      path.segments.push_back({state, t, T});
      break;
    }
    const double next = t + rng.exponential() / rate;
    if (next >= T) {
      path.segments.push_back({state, t, T});
      break;
    }
    path.segments.push_back({state, t, next});
    for (int j = 0; j < K; ++j) row[j] = sd.pi_h(state, j);
    const int to = static_cast<int>(rng.categorical(row, 1.0));
    path.revivals.push_back({next, state, to, 0.0, kNegInf});
    state = to;
    t = next;
  }
  return path;
}

double sample_revival_log_mark(const ModelSpec& spec, const SpectralData& sd, int from, Rng& rng) {
  const double g = sd.gamma[from];
  if (!(g > 0.0) || !spec.piNL[from]) return kNegInf;
  if (spec.c[from] > 0.0 && rng.uniform() * g < spec.c[from]) return kNegInf;
  return spec.piNL[from]->sample_size_biased_log(rng);
}

std::vector<ImmigrationEvent> sample_immigration(const ModelSpec& spec, const SpectralData& sd, SpinePath& spine,
                                                 Rng& rng) {
  const int K = spec.K;
  std::vector<ImmigrationEvent> events;
  for (auto& rev : spine.revivals) {
    rev.log_mark = sample_revival_log_mark(spec, sd, rev.from, rng);
    rev.mark = std::exp(rev.log_mark);
    Vector initial = Vector::Zero(K);
    if (rev.mark > 0.0)
      for (int j = 0; j < K; ++j) initial[j] = rev.mark * spec.pi(rev.from, j);
    events.push_back({rev.time, ImmigrationKind::Revival, rev.from, initial, rev.mark, rev.log_mark});
  }

  struct Pending {
    double time;
    int state;
  };
  std::vector<Pending> pending;
  for (const auto& seg : spine.segments) {
    if (!spec.piL[seg.state]) continue;
    const double length = seg.end - seg.start;
    const std::uint64_t count = rng.poisson(spec.piL[seg.state]->mean() * length);
    for (std::uint64_t n = 0; n < count; ++n) pending.push_back({seg.start + length * rng.uniform(), seg.state});
  }
  for (const auto& p : pending) {
    const double log_mass = spec.piL[p.state]->sample_size_biased_log(rng);
    const double mass = std::exp(log_mass);
    Vector initial = Vector::Zero(K);
    initial[p.state] = mass;
    events.push_back({p.time, ImmigrationKind::Discontinuous, p.state, initial, mass, log_mass});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const ImmigrationEvent& x, const ImmigrationEvent& y) { return x.time < y.time; });
  return events;
}

GammaRealization assemble_gamma(const ForwardSimulator& sim, const SpectralData& sd, const Vector& mu, double T,
                                const std::vector<double>& eval_times, Rng& rng) {
  const ModelSpec& spec = sim.spec();
  GammaRealization out;
  out.spine = sample_spine(sd, mu, T, rng);
  out.events = sample_immigration(spec, sd, out.spine, rng);

  PathSample root = sim.simulate(mu, T, eval_times, rng);
  out.n_events += root.n_events;
  out.root = root.states;
  out.gamma = root.states;

  std::vector<double> shifted;
  for (const auto& ev : out.events) {
    if (!(ev.mass > 0.0)) continue;
    if (!std::isfinite(ev.mass)) throw NumericalError("immigrant mass overflows double range");
    shifted.clear();
    std::size_t first = 0;
    while (first < eval_times.size() && eval_times[first] < ev.time) ++first;
    if (first == eval_times.size()) continue;
    if (T - ev.time < kHorizonSlack) {
      for (std::size_t e = first; e < eval_times.size(); ++e) out.gamma[e] += ev.initial;
      continue;
    }
    for (std::size_t e = first; e < eval_times.size(); ++e)
      shifted.push_back(std::clamp(eval_times[e] - ev.time, 0.0, T - ev.time));
    const PathSample child = sim.simulate(ev.initial, T - ev.time, shifted, rng);
    out.n_events += child.n_events;
    for (std::size_t e = first; e < eval_times.size(); ++e) out.gamma[e] += child.states[e - first];
  }
  return out;
}

TrajectoryBundle gamma_ensemble(const ForwardSimulator& sim, const SpectralData& sd, const Vector& mu, double T,
                                const std::vector<double>& eval_times, std::size_t n_paths, std::uint64_t master_seed,
                                unsigned threads) {
  if (n_paths < 1) throw SpecError("ensemble needs at least one path");
  const int K = sim.spec().K;
  TrajectoryBundle bundle;
  bundle.eval_times = eval_times;
  bundle.K = K;
  bundle.n_paths = n_paths;
  bundle.master_seed = master_seed;
  bundle.mu0 = mu;
  bundle.masses.assign(eval_times.size(), Matrix::Zero(static_cast<Eigen::Index>(n_paths), K));
  bundle.event_counts.assign(n_paths, 0);
  bundle.censored_at.assign(n_paths, std::numeric_limits<double>::infinity());
  parallel_for(n_paths, threads, [&](std::size_t p) {
    Rng rng(master_seed, p);
    const GammaRealization g = assemble_gamma(sim, sd, mu, T, eval_times, rng);
    bundle.event_counts[p] = g.n_events;
    for (std::size_t e = 0; e < eval_times.size(); ++e)
      bundle.masses[e].row(static_cast<Eigen::Index>(p)) = g.gamma[e].transpose();
  });
  return bundle;
}

double conditional_mean_given_G(const SpectralData& sd, const std::vector<ImmigrationEvent>& events, const Vector& mu,
                                const Vector& f, double t) {
  double value = (mean_matrix(sd, t) * f).dot(mu);
  for (const auto& ev : events) {
    if (ev.time > t || !(ev.mass > 0.0)) continue;
    value += ev.initial.dot(mean_matrix(sd, t - ev.time) * f);
  }
  return value;
}

double revival_sum(const SpinePath& spine, const RevivalTestFn& f, double t) {
  double total = 0.0;
  for (const auto& rev : spine.revivals)
    if (rev.time <= t) total += f(rev.time, rev.from, rev.to);
  return total;
}

namespace {

// phi(s, i) = q(i) sum_y f(s, i, y) pi_h(i, y)
Vector revival_intensity(const SpectralData& sd, const RevivalTestFn& f, double s) {
  const int K = sd.types();
  Vector phi = Vector::Zero(K);
  for (int i = 0; i < K; ++i) {
    if (!(sd.q[i] > 0.0)) continue;
    double acc = 0.0;
    for (int y = 0; y < K; ++y)
      if (sd.pi_h(i, y) > 0.0) acc += f(s, i, y) * sd.pi_h(i, y);
    phi[i] = sd.q[i] * acc;
  }
  return phi;
}

// G(s, .) = int_0^{t-s} e^{Q r} phi_g(s + r, .) dr
Vector remaining_intensity(const SpectralData& sd, const RevivalTestFn& g, double s, double t, const GaussRule& base,
                           int panels) {
  Vector acc = Vector::Zero(sd.types());
  if (t - s <= 0.0) return acc;
  const GaussRule rule = composite_rule(base, 0.0, t - s, panels);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    acc += rule.weights[k] * (spine_transition(sd, rule.nodes[k]) * revival_intensity(sd, g, s + rule.nodes[k]));
  return acc;
}

double second_order_term(const SpectralData& sd, const Vector& law, const RevivalTestFn& f, const RevivalTestFn& g,
                         double t, const GaussRule& outer, const GaussRule& base, int panels) {
  const int K = sd.types();
  double total = 0.0;
  for (std::size_t k = 0; k < outer.nodes.size(); ++k) {
    const double s = outer.nodes[k];
    const Vector occupation = (law.transpose() * spine_transition(sd, s)).transpose();
    const Vector remaining = remaining_intensity(sd, g, s, t, base, panels);
    double inner = 0.0;
    for (int i = 0; i < K; ++i) {
      if (!(sd.q[i] > 0.0)) continue;
      double acc = 0.0;
      for (int y = 0; y < K; ++y)
        if (sd.pi_h(i, y) > 0.0) acc += f(s, i, y) * sd.pi_h(i, y) * remaining[y];
      inner += occupation[i] * sd.q[i] * acc;
    }
    total += outer.weights[k] * inner;
  }
  return total;
}

}  // namespace

RevivalMomentTargets revival_moment_targets(const SpectralData& sd, const Vector& initial_law, const RevivalTestFn& f,
                                            const RevivalTestFn& g, double t) {
  constexpr int kPanels = 8;
  const GaussRule base = gauss_legendre(16);
  const GaussRule outer = composite_rule(base, 0.0, t, kPanels);
  RevivalTestFn fg = [&](double s, int i, int j) { return f(s, i, j) * g(s, i, j); };

  auto first = [&](const RevivalTestFn& fn) {
    double total = 0.0;
    for (std::size_t k = 0; k < outer.nodes.size(); ++k) {
      const Vector occupation = (initial_law.transpose() * spine_transition(sd, outer.nodes[k])).transpose();
      total += outer.weights[k] * occupation.dot(revival_intensity(sd, fn, outer.nodes[k]));
    }
    return total;
  };
  RevivalMomentTargets out;
  out.first_f = first(f);
  out.first_g = first(g);
  out.cross = first(fg) + second_order_term(sd, initial_law, f, g, t, outer, base, kPanels) +
              second_order_term(sd, initial_law, g, f, t, outer, base, kPanels);
  return out;
}

MarksSummary spine_marks_diagnostic(const ModelSpec& spec, const SpectralData& sd, const std::vector<SpinePath>& spines,
                                    const std::vector<std::vector<ImmigrationEvent>>& events, double burn_in) {
  MarksSummary out;
  out.n_paths = spines.size();
  std::vector<double> log_pi_h(spec.K);
  for (int i = 0; i < spec.K; ++i) log_pi_h[i] = std::log(spec.pi.row(i).dot(sd.h));
  for (const auto& path_events : events) {
    double best = 0.0;
    bool any = false;
    for (const auto& ev : path_events) {
      if (!(ev.mass > 0.0)) continue;
      any = true;
      if (ev.time <= burn_in) continue;
      const double log_weight = ev.kind == ImmigrationKind::Discontinuous ? std::log(sd.h[ev.type]) : log_pi_h[ev.type];
      best = std::max(best, std::max(0.0, ev.log_mass + log_weight) / ev.time);
    }
    if (any) ++out.n_with_marks;
    out.per_path.push_back(best);
  }
  out.empty = out.n_with_marks == 0;
  if (out.empty) {
    out.per_path.clear();
    return out;
  }
  out.median = quantile(out.per_path, 0.5);
  out.q90 = quantile(out.per_path, 0.9);
  out.q99 = quantile(out.per_path, 0.99);
  return out;
}

}  // namespace spinelab
