#include "spinelab/forward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spinelab/error.hpp"
#include "spinelab/kernels/kernels.hpp"
#include "spinelab/parallel.hpp"

namespace spinelab {
namespace {

constexpr double kExtinctMass = 1e-300;

void check_eval_times(std::span<const double> eval_times, double T) {
  for (std::size_t k = 0; k < eval_times.size(); ++k) {
    if (!(eval_times[k] >= 0.0 && eval_times[k] <= T)) throw SpecError("evaluation times must lie in [0, T]");
    if (k > 0 && eval_times[k] < eval_times[k - 1]) throw SpecError("evaluation times must be sorted");
  }
}

}  // namespace

Matrix build_flow_matrix(const ModelSpec& spec) {
  Matrix F = Matrix::Zero(spec.K, spec.K);
  for (int j = 0; j < spec.K; ++j) F(j, j) = -(spec.a[j] + spec.local_mean(j));
  for (int i = 0; i < spec.K; ++i)
    for (int j = 0; j < spec.K; ++j)
      if (i != j) F(j, i) += spec.c[i] * spec.pi(i, j);
  return F;
}

PopulationState flow(const PopulationState& state, double dt, const Matrix& F) {
  if (dt < 0.0) throw NumericalError("flow: dt must be non-negative");
  PopulationState out{state.masses, state.time + dt};
  if (dt == 0.0) return out;
  out.masses = (matrix_exponential(F, dt) * state.masses).cwiseMax(0.0);
  return out;
}

ForwardSimulator::ForwardSimulator(const ModelSpec& spec, ForwardOptions options)
    : spec_(&spec), options_(options) {
  if (!(options_.window > 0.0)) throw SpecError("thinning window must be positive");
  F_ = build_flow_matrix(spec);
  window_step_ = matrix_exponential(F_, options_.window);
  rate_.resize(spec.K);
  local_rate_.resize(spec.K);
  for (int i = 0; i < spec.K; ++i) {
    local_rate_[i] = spec.local_rate(i);
    rate_[i] = local_rate_[i] + spec.nonlocal_rate(i);
  }
  rate_max_ = rate_.maxCoeff();
  omega_ = std::max(0.0, F_.colwise().sum().maxCoeff());
}

void ForwardSimulator::advance(Vector& x, double dt, Vector& scratch) const {
  if (dt <= 0.0) return;
  const auto k = static_cast<std::size_t>(x.size());
  scratch.resize(x.size());
  if (dt == options_.window) {
    kernels::matvec(window_step_.data(), k, x.data(), scratch.data());
  } else {
    const Matrix step = matrix_exponential(F_, dt);
    kernels::matvec(step.data(), k, x.data(), scratch.data());
  }
  x = scratch.cwiseMax(0.0);
}

PathSample ForwardSimulator::simulate(const Vector& mu0, double T, std::span<const double> eval_times,
                                      Rng& rng) const {
  return run(mu0, T, eval_times, rng, false);
}

PathSample ForwardSimulator::simulate_partial(const Vector& mu0, double T, std::span<const double> eval_times,
                                              Rng& rng) const {
  return run(mu0, T, eval_times, rng, true);
}

PathSample ForwardSimulator::run(const Vector& mu0, double T, std::span<const double> eval_times, Rng& rng,
                                 bool partial) const {
  const ModelSpec& spec = *spec_;
  if (mu0.size() != spec.K) throw SpecError("initial measure has the wrong dimension");
  if ((mu0.array() < 0.0).any()) throw SpecError("initial measure must be non-negative");
  if (!(T >= 0.0)) throw SpecError("horizon must be non-negative");
  check_eval_times(eval_times, T);

  PathSample out;
  out.states.reserve(eval_times.size());
  Vector x = mu0;
  Vector scratch(spec.K), probe(spec.K), weights(spec.K);
  double t = 0.0;
  std::size_t next_eval = 0;

  // Record states at evaluation times before `limit` (or at it, if inclusive)
  // by flowing copies of the current state.
  auto emit = [&](double limit, bool inclusive) {
    while (next_eval < eval_times.size() &&
           (eval_times[next_eval] < limit || (inclusive && eval_times[next_eval] <= limit))) {
      probe = x;
      advance(probe, eval_times[next_eval] - t, scratch);
      out.states.push_back(probe);
      ++next_eval;
    }
  };

  while (t < T) {
    const double total = x.sum();
    if (total < kExtinctMass) {
      out.extinct = true;
      x.setZero();
      break;
    }
    const bool full_window = t + options_.window < T;
    const double window_end = full_window ? t + options_.window : T;
    const double bound = rate_max_ * total * std::exp(omega_ * (window_end - t));
    if (!(bound > 0.0)) {
      emit(T, true);
      advance(x, T - t, scratch);
      t = T;
      break;
    }
    const double candidate = t + rng.exponential() / bound;
    if (candidate >= window_end) {
      emit(window_end, true);
      advance(x, full_window ? options_.window : window_end - t, scratch);
      t = window_end;
      continue;
    }
    emit(candidate, false);
    advance(x, candidate - t, scratch);
    t = candidate;
    ++out.n_candidates;

    double rate = 0.0;
    for (int i = 0; i < spec.K; ++i) {
      weights[i] = rate_[i] * x[i];
      rate += weights[i];
    }
    if (rate > bound * (1.0 + 1e-9)) throw NumericalError("thinning bound violated");
    if (!(rng.uniform() * bound < rate)) continue;

    if (++out.n_events > options_.event_cap) {
      if (partial) {
        out.capped = true;
        out.cap_time = t;
        return out;
      }
      std::ostringstream os;
      os << "event cap " << options_.event_cap << " exceeded at t = " << t;
      throw EventCapError(os.str(), t);
    }
    const int type = static_cast<int>(rng.categorical(weights, rate));
    const bool local = rng.uniform() * rate_[type] < local_rate_[type];
    const JumpMeasure& jm = local ? *spec.piL[type] : *spec.piNL[type];
    const double size = jm.sample_plain(rng);
    if (local) {
      x[type] += size;
    } else {
      for (int j = 0; j < spec.K; ++j) x[j] += size * spec.pi(type, j);
    }
    if (options_.record_events) out.events.push_back({t, type, local ? JumpKind::Local : JumpKind::NonLocal, size});
  }
  emit(T, true);
  return out;
}

std::size_t TrajectoryBundle::censored() const {
  return static_cast<std::size_t>(
      std::count_if(censored_at.begin(), censored_at.end(), [](double c) { return std::isfinite(c); }));
}

TrajectoryBundle ensemble(const ForwardSimulator& sim, const Vector& mu0, double T,
                          const std::vector<double>& eval_times, std::size_t n_paths, std::uint64_t master_seed,
                          unsigned threads, CapPolicy policy) {
  if (n_paths < 1) throw SpecError("ensemble needs at least one path");
  const int K = sim.spec().K;
  TrajectoryBundle bundle;
  bundle.eval_times = eval_times;
  bundle.K = K;
  bundle.n_paths = n_paths;
  bundle.master_seed = master_seed;
  bundle.mu0 = mu0;
  bundle.masses.assign(eval_times.size(), Matrix::Zero(static_cast<Eigen::Index>(n_paths), K));
  bundle.event_counts.assign(n_paths, 0);
  bundle.censored_at.assign(n_paths, std::numeric_limits<double>::infinity());
  parallel_for(n_paths, threads, [&](std::size_t p) {
    Rng rng(master_seed, p);
    const PathSample path = policy == CapPolicy::Censor ? sim.simulate_partial(mu0, T, eval_times, rng)
                                                        : sim.simulate(mu0, T, eval_times, rng);
    bundle.event_counts[p] = path.n_events;
    const auto row = static_cast<Eigen::Index>(p);
    for (std::size_t e = 0; e < eval_times.size(); ++e) {
      if (e < path.states.size())
        bundle.masses[e].row(row) = path.states[e].transpose();
      else
        bundle.masses[e].row(row).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
    if (path.capped) bundle.censored_at[p] = path.cap_time;
  });
  return bundle;
}

}  // namespace spinelab
