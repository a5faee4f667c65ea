#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "spinelab/error.hpp"
#include "spinelab/jump_measure.hpp"
#include "spinelab/rng.hpp"

using namespace spinelab;

namespace {

// Frozen from an independent QUADPACK evaluation in s = log(theta) with the
// normalizer from 25-digit mpmath (rate 2 throughout).
struct LogParetoOracle {
  double beta, Z, mean;
  double y[3], deficit[3], tilted[3], compensated[3];
  double plain_mean_log;
};
constexpr LogParetoOracle kHeavy{1.5,
                                 0.1781477117815607,
                                 22.45327745160532,
                                 {0.05, 1.0, 4.0},
                                 {0.4683722041897695, 1.951000089204074, 1.999994434365402},
                                 {7.324634120517183, 0.1596202495036613, 1.6224792020564224e-05},
                                 {0.6542916683904965, 20.502277362401244, 87.81311537205588},
                                 1.5650247903409777};
constexpr LogParetoOracle kLight{3.0,
                                 0.10969196719776014,
                                 9.116437835389824,
                                 {0.05, 1.0, 4.0},
                                 {0.37318452744282277, 1.9351422893228922, 1.999991756566655},
                                 {6.449976763465204, 0.2053007049645674, 2.3898277969417734e-05},
                                 {0.08263736432666846, 7.1812955460669325, 34.46575958499264},
                                 1.3537500563574016};

bool close(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

template <typename F>
double sample_mean(std::size_t n, F&& draw, double& se) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  se = std::sqrt((s2 / n - m * m) / n);
  return m;
}

}  // namespace

TEST_CASE("rng streams are deterministic and open-interval") {
  Rng a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int k = 0; k < 1000; ++k) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs = differs || x != c.uniform();
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  CHECK(differs);
}

TEST_CASE("rng transforms match their moments") {
  Rng rng(7);
  double se = 0.0;
  double m = sample_mean(200000, [&] { return rng.exponential(); }, se);
  CHECK(std::abs(m - 1.0) < 4 * se);
  for (double mean : {0.3, 4.0, 55.0}) {
    m = sample_mean(100000, [&] { return double(rng.poisson(mean)); }, se);
    CHECK(std::abs(m - mean) < 4 * se);
  }
  CHECK(rng.poisson(0.0) == 0);
  std::vector<double> w{0.0, 1.0, 3.0};
  std::size_t hits[3] = {0, 0, 0};
  for (int k = 0; k < 40000; ++k) ++hits[rng.categorical(w, 4.0)];
  CHECK(hits[0] == 0);
  CHECK(std::abs(hits[2] / 40000.0 - 0.75) < 4 * std::sqrt(0.75 * 0.25 / 40000));
}

TEST_CASE("factories reject invalid measures") {
  CHECK_THROWS_AS(JumpMeasure::atoms({}), SpecError);
  CHECK_THROWS_AS(JumpMeasure::atoms({{-1.0, 1.0}}), SpecError);
  CHECK_THROWS_AS(JumpMeasure::atoms({{1.0, 0.0}}), SpecError);
  CHECK_THROWS_AS(JumpMeasure::log_pareto(1.0, 1.0), SpecError);
  CHECK_THROWS_AS(JumpMeasure::log_pareto(0.0, 2.0), SpecError);
  CHECK_THROWS_AS(JumpMeasure::log_pareto(1.0, std::numeric_limits<double>::infinity()), SpecError);
}

TEST_CASE("atom closed forms") {
  const JumpMeasure m = JumpMeasure::atoms({{0.5, 2.0}, {3.0, 0.25}});
  CHECK(m.total_rate() == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(m.mean() == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(m.second_moment() == doctest::Approx(0.5 + 2.25).epsilon(1e-15));
  CHECK_FALSE(m.unbounded_support());
  for (double y : {0.0, 0.1, 1.0, 7.0}) {
    const double def = 2.0 * (1 - std::exp(-0.5 * y)) + 0.25 * (1 - std::exp(-3 * y));
    const double tilt = 2.0 * 0.5 * std::exp(-0.5 * y) + 0.25 * 3.0 * std::exp(-3 * y);
    CHECK(std::abs(m.laplace_deficit(y) - def) < 1e-15);
    CHECK(std::abs(m.tilted_mean(y) - tilt) < 1e-15);
    CHECK(std::abs(m.compensated_laplace(y) - (y * 1.75 - def)) < 1e-14);
    CHECK(std::abs(m.size_weighted_deficit(y) - (1.75 - tilt)) < 1e-14);
  }
  // theta log+(s theta): only atoms with s theta > 1 count.
  CHECK(m.llogl_moment(1.0) == doctest::Approx(0.25 * 3.0 * std::log(3.0)).epsilon(1e-15));
  CHECK(m.llogl_moment(4.0) ==
        doctest::Approx(2.0 * 0.5 * std::log(2.0) + 0.25 * 3.0 * std::log(12.0)).epsilon(1e-15));
}

TEST_CASE("logpareto normalizer, mean and integrals against frozen quadrature") {
  for (const LogParetoOracle& o : {kHeavy, kLight}) {
    CAPTURE(o.beta);
    CHECK(close(log_pareto_normalizer(o.beta), o.Z, 1e-13));
    const JumpMeasure m = JumpMeasure::log_pareto(2.0, o.beta);
    CHECK(close(m.mean(), o.mean, 1e-13));
    CHECK(m.unbounded_support());
    CHECK(std::isinf(m.second_moment()));
    for (int k = 0; k < 3; ++k) {
      CAPTURE(o.y[k]);
      CHECK(close(m.laplace_deficit(o.y[k]), o.deficit[k], 1e-11));
      CHECK(close(m.tilted_mean(o.y[k]), o.tilted[k], 1e-10));
      CHECK(close(m.compensated_laplace(o.y[k]), o.compensated[k], 1e-10));
    }
    CHECK(m.laplace_deficit(0.0) == 0.0);
    CHECK(close(m.tilted_mean(0.0), o.mean, 1e-13));
  }
}

TEST_CASE("logpareto llogl moment") {
  CHECK(std::isinf(JumpMeasure::log_pareto(2.0, 1.5).llogl_moment(1.0)));
  CHECK(std::isinf(JumpMeasure::log_pareto(2.0, 2.0).llogl_moment(0.3)));
  const JumpMeasure m = JumpMeasure::log_pareto(2.0, 3.0);
  CHECK(close(m.llogl_moment(0.1), 3.9592186465238264, 1e-12));
  CHECK(close(m.llogl_moment(1.0), 18.23287567077965, 1e-12));
  CHECK(close(m.llogl_moment(3.0), 28.24830630561781, 1e-12));
}

TEST_CASE("deficit derivative is the tilted mean") {
  for (const JumpMeasure& m :
       {JumpMeasure::log_pareto(1.0, 1.5), JumpMeasure::log_pareto(0.7, 3.0), JumpMeasure::atoms({{2.0, 1.0}})}) {
    for (double y : {0.02, 0.5, 2.0}) {
      const double h = 1e-4 * y;
      // Richardson-extrapolated central difference
      const double d1 = (m.laplace_deficit(y + h) - m.laplace_deficit(y - h)) / (2 * h);
      const double d2 = (m.laplace_deficit(y + h / 2) - m.laplace_deficit(y - h / 2)) / h;
      CHECK(close((4 * d2 - d1) / 3, m.tilted_mean(y), 1e-7));
    }
  }
}

TEST_CASE("samplers follow their laws") {
  Rng rng(99);
  const std::size_t n = 200000;
  double se = 0.0;
  for (const LogParetoOracle& o : {kHeavy, kLight}) {
    const JumpMeasure m = JumpMeasure::log_pareto(2.0, o.beta);
    const double got = sample_mean(n, [&] { return std::log(m.sample_plain(rng)); }, se);
    CHECK(std::abs(got - o.plain_mean_log) < 4 * se);
    // size-biased: log theta has tail s^{1-beta} on [1, inf)
    const double p4 = std::pow(4.0, 1.0 - o.beta);
    const double frac = sample_mean(n, [&] { return m.sample_size_biased_log(rng) > 4.0 ? 1.0 : 0.0; }, se);
    CHECK(std::abs(frac - p4) < 4 * std::sqrt(p4 * (1 - p4) / n));
    for (int k = 0; k < 1000; ++k) {
      CHECK(m.sample_plain(rng) >= std::exp(1.0));
      CHECK(m.sample_size_biased_log(rng) >= 1.0);
    }
  }
  const JumpMeasure atoms = JumpMeasure::atoms({{0.5, 3.0}, {2.0, 1.0}});
  double small = sample_mean(n, [&] { return atoms.sample_plain(rng) == 0.5 ? 1.0 : 0.0; }, se);
  CHECK(std::abs(small - 0.75) < 4 * std::sqrt(0.75 * 0.25 / n));
  // size-biased weights 1.5 : 2
  small = sample_mean(n, [&] { return atoms.sample_size_biased(rng) == 0.5 ? 1.0 : 0.0; }, se);
  CHECK(std::abs(small - 1.5 / 3.5) < 4 * std::sqrt(0.43 * 0.57 / n));
}
