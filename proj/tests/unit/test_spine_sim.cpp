#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "spinelab/error.hpp"
#include "spinelab/spine_sim.hpp"

using namespace spinelab;
using fixtures::max_abs;

namespace {

struct Tally {
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  void add(double x) {
    sum += x;
    sum2 += x * x;
    ++n;
  }
  double mean() const { return sum / n; }
  double se() const { return std::sqrt(std::max(0.0, sum2 / n - mean() * mean()) / n); }
};

}  // namespace

TEST_CASE("spine paths tile the horizon") {
  const SpectralData sd = analyse(fixtures::ring3atoms());
  Rng rng(1, 0);
  for (int k = 0; k < 200; ++k) {
    const SpinePath p = sample_spine(sd, Vector::Ones(3), 4.0, rng);
    REQUIRE_FALSE(p.segments.empty());
    CHECK(p.segments.front().start == 0.0);
    CHECK(p.segments.back().end == 4.0);
    CHECK(p.segments.front().state == p.initial);
    CHECK(p.revivals.size() + 1 == p.segments.size());
    for (std::size_t s = 1; s < p.segments.size(); ++s) {
      CHECK(p.segments[s].start == p.segments[s - 1].end);
      CHECK(p.segments[s].state != p.segments[s - 1].state);
      CHECK(p.revivals[s - 1].time == p.segments[s].start);
      CHECK(p.revivals[s - 1].from == p.segments[s - 1].state);
      CHECK(p.revivals[s - 1].to == p.segments[s].state);
      CHECK(p.state_at(0.5 * (p.segments[s].start + p.segments[s].end)) == p.segments[s].state);
    }
  }
}

TEST_CASE("holding times and jump chain follow Q_spine") {
  const SpectralData sd = analyse(fixtures::ring3atoms());
  const std::size_t n = 60000;
  std::vector<Tally> hold(3);
  Matrix jumps = Matrix::Zero(3, 3);
  Rng rng(2, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const SpinePath p = sample_spine(sd, Vector::Ones(3), 60.0, rng);
    hold[p.initial].add(p.segments.front().end);
    if (!p.revivals.empty()) jumps(p.revivals[0].from, p.revivals[0].to) += 1.0;
  }
  for (int i = 0; i < 3; ++i) {
    CAPTURE(i);
    CHECK(std::abs(hold[i].mean() - 1.0 / sd.q[i]) < 4.0 * hold[i].se());
    const double row = jumps.row(i).sum();
    for (int j = 0; j < 3; ++j) {
      const double p = sd.pi_h(i, j);
      CHECK(std::abs(jumps(i, j) / row - p) <= 4.0 * std::sqrt(p * (1.0 - p) / row) + 1e-12);
    }
  }
}

TEST_CASE("spine marginal and stationary law") {
  const SpectralData sd = analyse(fixtures::ring3atoms());
  const double t = 0.8;
  const std::size_t n = 60000;
  Vector mu(3);
  mu << 1.0, 0.0, 0.5;
  const Vector law0 = spine_initial_law(sd, mu);
  CHECK(law0.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(law0[1] == 0.0);
  const Vector want = (law0.transpose() * spine_transition(sd, t)).transpose();
  const Vector stationary = sd.rho / sd.rho.sum();
  // starting from mu proportional to v puts the spine in rho from the start
  const Vector law_v = spine_initial_law(sd, sd.v);
  CHECK(max_abs(Vector(law_v - stationary)) < 1e-12);

  Vector hits = Vector::Zero(3), hits_v = Vector::Zero(3);
  Rng rng(3, 0);
  for (std::size_t k = 0; k < n; ++k) {
    hits[sample_spine(sd, mu, t, rng).state_at(t)] += 1.0;
    hits_v[sample_spine(sd, sd.v, 3.0, rng).state_at(3.0)] += 1.0;
  }
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(hits[j] / n - want[j]) < 4.0 * std::sqrt(want[j] * (1 - want[j]) / n));
    CHECK(std::abs(hits_v[j] / n - stationary[j]) < 4.0 * std::sqrt(stationary[j] * (1 - stationary[j]) / n));
  }
  CHECK_THROWS_AS(sample_spine(sd, Vector::Zero(3), 1.0, rng), SpecError);
}

TEST_CASE("revival marks") {
  const ModelSpec plain = fixtures::sym2();
  const SpectralData sd0 = analyse(plain);
  Rng rng(4, 0);
  for (int k = 0; k < 100; ++k) CHECK(std::isinf(sample_revival_log_mark(plain, sd0, k % 2, rng)));

  // type 3 of ring3atoms: Theta = 0 w.p. c / gamma = 2/3, else the single atom 0.5
  const ModelSpec s = fixtures::ring3atoms();
  const SpectralData sd = analyse(s);
  const std::size_t n = 60000;
  double positive = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double lm = sample_revival_log_mark(s, sd, 2, rng);
    if (std::isfinite(lm)) {
      positive += 1.0;
      CHECK(lm == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    } else {
      CHECK(lm < 0.0);
    }
  }
  CHECK(std::abs(positive / n - 1.0 / 3.0) < 4.0 * std::sqrt(2.0 / 9.0 / n));
  for (int k = 0; k < 100; ++k) CHECK(std::isinf(sample_revival_log_mark(s, sd, 0, rng)));
}

TEST_CASE("discontinuous immigration counts match spine occupation") {
  const ModelSpec s = fixtures::ring3atoms();
  const SpectralData sd = analyse(s);
  Rng rng(5, 0);
  double excess = 0.0, expected = 0.0;
  for (int k = 0; k < 20000; ++k) {
    SpinePath spine = sample_spine(sd, Vector::Ones(3), 3.0, rng);
    const auto events = sample_immigration(s, sd, spine, rng);
    double count = 0.0, revivals = 0.0, prev = 0.0;
    for (const ImmigrationEvent& ev : events) {
      CHECK(ev.time >= prev);
      prev = ev.time;
      if (ev.kind == ImmigrationKind::Discontinuous) {
        count += 1.0;
        CHECK(spine.state_at(ev.time) == ev.type);
        CHECK(ev.initial[ev.type] == ev.mass);
        CHECK(ev.initial.sum() == ev.mass);
        if (ev.type == 0) CHECK((ev.mass == 0.5 || ev.mass == 2.0));
      } else {
        revivals += 1.0;
        CHECK(max_abs(Vector(ev.initial - ev.mass * s.pi.row(ev.type).transpose())) < 1e-15);
      }
    }
    CHECK(revivals == spine.revivals.size());
    for (const SpineSegment& seg : spine.segments) expected += (seg.end - seg.start) * s.local_mean(seg.state);
    excess += count;
  }
  excess -= expected;
  // conditionally Poisson given the spine
  CHECK(std::abs(excess) < 4.0 * std::sqrt(expected));
}

TEST_CASE("gamma starts at mu and conditional means are consistent") {
  const ModelSpec s = fixtures::ring3atoms();
  const SpectralData sd = analyse(s);
  const ForwardSimulator sim(s);
  Vector mu(3);
  mu << 1.0, 0.5, 0.25;
  const std::vector<double> ts{0.0, 0.7, 1.5};
  Rng rng(6, 0);
  for (int k = 0; k < 200; ++k) {
    const GammaRealization g = assemble_gamma(sim, sd, mu, 1.5, ts, rng);
    CHECK(g.gamma[0] == mu);
    CHECK(g.root[0] == mu);
    for (std::size_t e = 0; e < ts.size(); ++e) CHECK(((g.gamma[e] - g.root[e]).array() >= -1e-15).all());
    // f = h collapses every semigroup term to a scalar exponential
    double want = std::exp(-sd.lambda1 * 1.5) * sd.h.dot(mu);
    for (const auto& ev : g.events) want += std::exp(-sd.lambda1 * (1.5 - ev.time)) * ev.initial.dot(sd.h);
    CHECK(conditional_mean_given_G(sd, g.events, mu, sd.h, 1.5) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("gamma ensembles are reproducible across worker counts") {
  const ModelSpec s = fixtures::sym2atoms();
  const SpectralData sd = analyse(s);
  const ForwardSimulator sim(s);
  const std::vector<double> ts{0.5, 1.0};
  const TrajectoryBundle a = gamma_ensemble(sim, sd, Vector::Ones(2), 1.0, ts, 300, 12, 1);
  const TrajectoryBundle b = gamma_ensemble(sim, sd, Vector::Ones(2), 1.0, ts, 300, 12, 3);
  for (std::size_t e = 0; e < ts.size(); ++e)
    CHECK(std::memcmp(a.masses[e].data(), b.masses[e].data(), sizeof(double) * a.masses[e].size()) == 0);
  CHECK(a.event_counts == b.event_counts);
}

TEST_CASE("revival sums and their analytic moments") {
  // sym2: constant holding rate 1, so revivals form a unit Poisson process
  const SpectralData sd = analyse(fixtures::sym2());
  const RevivalTestFn one = [](double, int, int) { return 1.0; };
  for (double t : {0.5, 2.0, 3.0}) {
    const RevivalMomentTargets m = revival_moment_targets(sd, Vector::Constant(2, 0.5), one, one, t);
    CHECK(m.first_f == doctest::Approx(t).epsilon(1e-12));
    CHECK(m.first_g == doctest::Approx(t).epsilon(1e-12));
    CHECK(m.cross == doctest::Approx(t + t * t).epsilon(1e-10));
  }
  // a time-weighted function: E sum e^{-tau} = int_0^t e^{-s} ds
  const RevivalTestFn decay = [](double s, int, int) { return std::exp(-s); };
  const RevivalMomentTargets m = revival_moment_targets(sd, Vector::Constant(2, 0.5), decay, one, 2.0);
  CHECK(m.first_f == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  // E[S_f N] for a Poisson process: int f + (int f)(t)
  CHECK(m.cross == doctest::Approx((1.0 - std::exp(-2.0)) * (1.0 + 2.0)).epsilon(1e-10));

  Rng rng(7, 0);
  const SpinePath p = sample_spine(sd, Vector::Ones(2), 2.0, rng);
  double direct = 0.0;
  for (const Revival& r : p.revivals)
    if (r.time <= 1.0) direct += std::exp(-r.time);
  CHECK(revival_sum(p, decay, 1.0) == direct);
}
