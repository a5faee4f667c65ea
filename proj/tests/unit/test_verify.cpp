#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "spinelab/verify.hpp"

using namespace spinelab;

namespace {

// Batch means written out directly: B contiguous batches of near-equal size.
double batch_se_oracle(const std::vector<double>& x, std::size_t B) {
  const std::size_t n = x.size();
  std::vector<double> means;
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t lo = b * n / B, hi = (b + 1) * n / B;
    long double s = 0.0L;
    for (std::size_t k = lo; k < hi; ++k) s += x[k];
    means.push_back(double(s / (hi - lo)));
  }
  long double g = 0.0L;
  for (double m : means) g += m;
  g /= B;
  long double v = 0.0L;
  for (double m : means) v += (m - g) * (m - g);
  return std::sqrt(double(v / (B - 1)) / B);
}

RegimeRung rung(double T, double mean, double se, double median, double small) {
  RegimeRung r;
  r.T = T;
  r.mean = mean;
  r.standard_error = se;
  r.median_ratio = median;
  r.small_fraction = small;
  return r;
}

}  // namespace

TEST_CASE("batch-means standard error") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(3.0, 2.0);
  for (std::size_t n : {10, 29, 30, 100, 1000, 12345, 100000}) {
    std::vector<double> x(n);
    for (auto& v : x) v = nd(gen);
    const Estimate e = estimate_mean(x, 3.0, "m");
    const std::size_t B = n < 30 ? n : std::max<std::size_t>(30, std::size_t(std::sqrt(double(n))));
    CAPTURE(n);
    CHECK(e.n_samples == n);
    CHECK(e.standard_error == doctest::Approx(batch_se_oracle(x, B)).epsilon(1e-9));
    long double s = 0.0L;
    for (double v : x) s += v;
    CHECK(e.value == doctest::Approx(double(s / n)).epsilon(1e-13));
    if (n >= 1000) CHECK(std::abs(e.standard_error / (2.0 / std::sqrt(double(n))) - 1.0) < 0.35);
  }
  // n < 30: batches of one reduce to the plain standard error
  const std::vector<double> small{1.0, 2.0, 4.0};
  const double m = 7.0 / 3.0;
  const double plain = std::sqrt(((1 - m) * (1 - m) + (2 - m) * (2 - m) + (4 - m) * (4 - m)) / 2.0 / 3.0);
  CHECK(estimate_mean(small).standard_error == doctest::Approx(plain).epsilon(1e-14));
  CHECK(estimate_mean(std::vector<double>{}).n_samples == 0);
}

TEST_CASE("z scores and pass rule") {
  Estimate e;
  e.value = 1.0;
  e.standard_error = 0.25;
  CHECK_FALSE(e.z_score());
  CHECK_FALSE(e.passes(4.0));
  e.target = 0.0;
  CHECK(*e.z_score() == 4.0);
  CHECK(e.passes(4.0));
  CHECK_FALSE(e.passes(3.9));
  e.standard_error = 0.0;
  CHECK(std::isinf(*e.z_score()));
  e.value = 0.0;
  CHECK(*e.z_score() == 0.0);

  const std::vector<double> constant(500, 2.0);
  const Estimate c = estimate_mean(constant, 2.0);
  CHECK(c.standard_error == 0.0);
  CHECK(c.passes(4.0));
  CHECK_FALSE(estimate_mean(constant, 2.5).passes(4.0));

  Estimate a, b;
  a.value = 1.0;
  a.standard_error = 0.3;
  b.value = 0.5;
  b.standard_error = 0.4;
  const Estimate d = compare_estimates(a, b, "diff");
  CHECK(d.value == 0.5);
  CHECK(d.standard_error == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(*d.target == 0.0);
  CHECK_FALSE(d.note.empty());
  CHECK(all_pass({c, d}, 4.0));
  CHECK_FALSE(all_pass({c, estimate_mean(constant, 0.0)}, 4.0));
}

TEST_CASE("zero initial mass gives zero estimates on zero targets") {
  const ModelSpec s = fixtures::sym2atoms();
  const SpectralData sd = analyse(s);
  const ForwardSimulator sim(s);
  const TrajectoryBundle b = ensemble(sim, Vector::Zero(2), 1.0, {0.5, 1.0}, 200, 3, 1);
  for (const auto& e : test_mean(b, sd)) {
    CHECK(e.value == 0.0);
    CHECK(*e.target == 0.0);
    CHECK(e.passes(4.0));
  }
  for (const auto& e : test_martingale(b, sd)) {
    CHECK(e.value == 0.0);
    CHECK(e.passes(4.0));
  }
}

TEST_CASE("deterministic linear spec has an exact martingale") {
  const ModelSpec s = fixtures::sym2();
  const SpectralData sd = analyse(s);
  const ForwardSimulator sim(s);
  Vector mu(2);
  mu << 1.0, 0.2;
  const TrajectoryBundle b = ensemble(sim, mu, 2.0, {0.5, 1.0, 2.0}, 100, 5, 1);
  for (const auto& e : test_martingale(b, sd)) {
    CAPTURE(e.label);
    CHECK(e.standard_error == 0.0);
    CHECK(std::abs(e.value - sd.h.dot(mu)) < 1e-13);
    CHECK(e.passes(4.0));
  }
  for (const auto& e : test_mean(b, sd)) CHECK(e.passes(4.0));
  // f = 0 has Laplace functional 1 on both sides
  for (const auto& e : test_laplace(b, s, {Vector::Zero(2)})) {
    CHECK(e.value == 1.0);
    CHECK(*e.target == 1.0);
  }
}

TEST_CASE("regime verdict rules") {
  VerifyConfig cfg;
  const double target = 1.0;
  using V = EmpiricalVerdict;
  CHECK(regime_verdict({rung(1, 1, .1, .02, .9), rung(2, 1, .1, .3, .1), rung(3, 1, .1, .3, .1)}, target, cfg) ==
        V::NONDEGENERATE);
  CHECK(regime_verdict({rung(1, 1, .1, .3, .1), rung(2, 1, .1, .04, .1), rung(3, 1, .1, .3, .1)}, target, cfg) ==
        V::INCONCLUSIVE);
  // collapse with the mean held up by rare paths
  CHECK(regime_verdict({rung(1, 1, .1, .2, .1), rung(2, .9, .1, .02, .4), rung(3, .8, .1, .005, .4)}, target, cfg) ==
        V::DEGENERATE);
  // collapse with most paths small
  CHECK(regime_verdict({rung(1, 1, .1, .2, .1), rung(2, .2, .01, .02, .4), rung(3, .1, .01, .005, .6)}, target,
                       cfg) == V::DEGENERATE);
  CHECK(regime_verdict({rung(1, 1, .1, .2, .1), rung(2, .2, .01, .02, .4), rung(3, .1, .01, .005, .3)}, target,
                       cfg) == V::INCONCLUSIVE);
  CHECK(regime_verdict({rung(1, 1, .1, .2, .1), rung(2, 1, .1, .02, .4), rung(3, 1, .1, .011, .4)}, target, cfg) ==
        V::INCONCLUSIVE);
  cfg.median_keep = 0.5;
  CHECK(regime_verdict({rung(1, 1, .1, .3, .1), rung(2, 1, .1, .3, .1)}, target, cfg) == V::INCONCLUSIVE);
  CHECK(to_string(V::DEGENERATE) == "DEGENERATE");
}

TEST_CASE("pure-death extinction times follow the closed form") {
  ModelSpec s = fixtures::blank(2);
  s.a << 1.0, 2.0;
  s.pi << 0, 1, 1, 0;
  const ForwardSimulator sim(s);
  Vector mu(2);
  mu << 1.0, 3.0;
  SpectralData sd;
  sd.lambda1 = 1.0;  // = min a
  VerifyConfig cfg;
  const double eps = cfg.extinction_level;
  const double t0 = std::log(mu[0] / eps) / s.a[0];  // 4.605
  const double t1 = std::log(mu[1] / eps) / s.a[1];  // 2.852
  const std::vector<double> ladder{1.0, 2.0, 2.8, 2.9, 4.6, 4.7, 6.0};
  const TrajectoryBundle b = ensemble(sim, mu, 6.0, ladder, 20, 1, 1);
  const ExtinctionReport r = weak_extinction_test(b, sd, cfg);
  REQUIRE(r.applicable);
  REQUIRE(r.series.size() == 2);
  for (std::size_t e = 0; e < ladder.size(); ++e) {
    CHECK(r.series[0].fraction[e] == (ladder[e] < t0 ? 1.0 : 0.0));
    CHECK(r.series[1].fraction[e] == (ladder[e] < t1 ? 1.0 : 0.0));
    CHECK(r.series[0].standard_error[e] == 0.0);
  }
  CHECK(r.passes());

  const std::vector<double> early{1.0, 2.0, 3.0};
  CHECK_FALSE(weak_extinction_test(ensemble(sim, mu, 3.0, early, 20, 1, 1), sd, cfg).passes());

  const SpectralData super = analyse(fixtures::sym2atoms());
  const ExtinctionReport skipped = weak_extinction_test(b, super, cfg);
  CHECK_FALSE(skipped.applicable);
  CHECK(skipped.series.empty());
  CHECK(skipped.to_json()["applicable"] == false);
}

TEST_CASE("spine equivalence at g = 0 and the revival moment estimates") {
  const ModelSpec s = fixtures::sym2atoms();
  const SpectralData sd = analyse(s);
  const ForwardSimulator sim(s);
  const Vector mu = Vector::Ones(2);
  const std::vector<double> ts{0.5, 1.0};
  const TrajectoryBundle fwd = ensemble(sim, mu, 1.0, ts, 4000, 8, 1);
  const TrajectoryBundle sp = gamma_ensemble(sim, sd, mu, 1.0, ts, 4000, 9, 1);
  const auto est = test_spine_equivalence(fwd, sp, s, sd, {Vector::Zero(2)});
  REQUIRE(est.size() == 3 * ts.size());
  for (const auto& e : est) {
    CAPTURE(e.label);
    CHECK(e.passes(4.0));
    if (e.target && *e.target != 0.0) CHECK(std::abs(*e.target - 1.0) < 1e-9);
  }
  const RevivalTestFn one = [](double, int, int) { return 1.0; };
  for (const auto& e : test_revival_moments(sd, mu, one, one, 1.0, 5000, 10, 1)) {
    CAPTURE(e.label);
    CHECK(e.passes(4.0));
  }
}

TEST_CASE("reports echo their configuration") {
  VerifyConfig cfg;
  cfg.z_max = 3.5;
  const auto j = cfg.to_json();
  CHECK(j["z_max"] == 3.5);
  CHECK(j["median_keep"] == 0.05);
  CHECK(j["median_collapse"] == 0.01);
}
