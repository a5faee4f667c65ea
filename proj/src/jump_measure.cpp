#include "spinelab/jump_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spinelab/error.hpp"

namespace spinelab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-10;
constexpr unsigned kQuadDepth = 30;

template <typename F>
double integrate(F&& f, double lo, double hi) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  return Rule::integrate(f, lo, hi, kQuadDepth, kQuadTol);
}

// Log-moment integrals of LogPareto, all in s = log(theta) on [1, inf).
// The integrand switches behaviour near s = log(1/y); splitting there keeps
// every piece smooth for the Kronrod rule.
double split_point(double y) { return std::max(1.0, -std::log(y)); }

double lp_laplace_deficit(const LogPareto& lp, double z, double y) {
  if (y <= 0.0) return 0.0;
  auto f = [&](double s) { return -std::expm1(-y * std::exp(s)) * std::exp(-s) * std::pow(s, -lp.beta); };
  const double s0 = split_point(y);
  double value = integrate(f, s0, kInf);
  if (s0 > 1.0) value += integrate(f, 1.0, s0);
  return lp.total_rate / z * value;
}

double lp_tilted_mean(const LogPareto& lp, double z, double y) {
  if (y <= 0.0) return lp.total_rate / ((lp.beta - 1.0) * z);
  auto f = [&](double s) { return std::exp(-y * std::exp(s)) * std::pow(s, -lp.beta); };
  // Beyond s0 + 6 the factor e^{-y e^s} is below e^{-400}.
  const double s0 = split_point(y);
  double value = integrate(f, s0, s0 + 6.0);
  if (s0 > 1.0) value += integrate(f, 1.0, s0);
  return lp.total_rate / z * value;
}

}  // namespace

double log_pareto_normalizer(double beta) {
  return integrate([beta](double s) { return std::exp(-s) * std::pow(s, -beta); }, 1.0, kInf);
}

JumpMeasure::JumpMeasure(std::variant<Atoms, LogPareto> family) : family_(std::move(family)) {}

JumpMeasure JumpMeasure::atoms(std::vector<Atoms::Atom> atoms) {
  if (atoms.empty()) throw SpecError("atoms jump measure needs at least one atom");
  double rate = 0.0, mean = 0.0;
  for (const auto& a : atoms) {
    if (!(a.size > 0.0) || !std::isfinite(a.size)) throw SpecError("atom size must be positive and finite");
    if (!(a.rate > 0.0) || !std::isfinite(a.rate)) throw SpecError("atom rate must be positive and finite");
    rate += a.rate;
    mean += a.rate * a.size;
  }
  JumpMeasure jm(Atoms{std::move(atoms)});
  jm.total_rate_ = rate;
  jm.mean_ = mean;
  return jm;
}

JumpMeasure JumpMeasure::log_pareto(double total_rate, double beta) {
  if (!(total_rate > 0.0) || !std::isfinite(total_rate)) throw SpecError("logpareto rate must be positive and finite");
  if (!(beta > 1.0) || !std::isfinite(beta)) throw SpecError("logpareto beta must exceed 1 (finite mean)");
  JumpMeasure jm(LogPareto{total_rate, beta});
  jm.normalizer_ = log_pareto_normalizer(beta);
  jm.total_rate_ = total_rate;
  jm.mean_ = total_rate / ((beta - 1.0) * jm.normalizer_);
  return jm;
}

double JumpMeasure::second_moment() const noexcept {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    double m2 = 0.0;
    for (const auto& a : at->atoms) m2 += a.rate * a.size * a.size;
    return m2;
  }
  return kInf;
}

double JumpMeasure::llogl_moment(double scale) const {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    double m = 0.0;
    for (const auto& a : at->atoms) m += a.rate * a.size * std::max(0.0, std::log(scale * a.size));
    return m;
  }
  const auto& lp = std::get<LogPareto>(family_);
  if (lp.beta <= 2.0) return kInf;
  // int_1^inf (s + log scale)^+ s^{-beta} ds in closed form.
  const double shift = std::log(scale);
  const double c = lp.total_rate / normalizer_;
  if (shift >= -1.0) return c * (1.0 / (lp.beta - 2.0) + shift / (lp.beta - 1.0));
  const double cut = -shift;
  return c * std::pow(cut, 2.0 - lp.beta) / ((lp.beta - 1.0) * (lp.beta - 2.0));
}

double JumpMeasure::laplace_deficit(double y) const {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    double v = 0.0;
    for (const auto& a : at->atoms) v += a.rate * -std::expm1(-y * a.size);
    return v;
  }
  return lp_laplace_deficit(std::get<LogPareto>(family_), normalizer_, y);
}

double JumpMeasure::tilted_mean(double y) const {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    double v = 0.0;
    for (const auto& a : at->atoms) v += a.rate * a.size * std::exp(-y * a.size);
    return v;
  }
  return lp_tilted_mean(std::get<LogPareto>(family_), normalizer_, y);
}

double JumpMeasure::compensated_laplace(double y) const {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    double v = 0.0;
    for (const auto& a : at->atoms) {
      const double x = y * a.size;
      v += a.rate * (std::expm1(-x) + x);
    }
    return v;
  }
  return y * mean_ - laplace_deficit(y);
}

double JumpMeasure::size_weighted_deficit(double y) const {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    double v = 0.0;
    for (const auto& a : at->atoms) v += a.rate * a.size * -std::expm1(-y * a.size);
    return v;
  }
  return mean_ - tilted_mean(y);
}

double JumpMeasure::sample_plain(Rng& rng) const {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    if (at->atoms.size() == 1) return at->atoms.front().size;
    std::vector<double> w;
    w.reserve(at->atoms.size());
    for (const auto& a : at->atoms) w.push_back(a.rate);
    return at->atoms[rng.categorical(w, total_rate_)].size;
  }
  // Density of s = log theta is proportional to e^{-s} s^{-beta} on [1, inf):
  // propose 1 + Exp(1), accept with probability s^{-beta}.
  const auto& lp = std::get<LogPareto>(family_);
  for (;;) {
    const double s = 1.0 + rng.exponential();
    if (rng.uniform() < std::pow(s, -lp.beta)) return std::exp(s);
  }
}

double JumpMeasure::sample_size_biased_log(Rng& rng) const {
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    if (at->atoms.size() == 1) return std::log(at->atoms.front().size);
    std::vector<double> w;
    w.reserve(at->atoms.size());
    for (const auto& a : at->atoms) w.push_back(a.rate * a.size);
    return std::log(at->atoms[rng.categorical(w, mean_)].size);
  }
  // Size-biased density of s is proportional to s^{-beta} on [1, inf), so
  // P(S > s) = s^{1-beta} and S = U^{-1/(beta-1)}.
  const auto& lp = std::get<LogPareto>(family_);
  return std::pow(rng.uniform(), -1.0 / (lp.beta - 1.0));
}

double JumpMeasure::sample_size_biased(Rng& rng) const {
  if (!(mean_ > 0.0)) throw SpecError("size-biased sampling needs a positive mean");
  if (const auto* at = std::get_if<Atoms>(&family_)) {
    if (at->atoms.size() == 1) return at->atoms.front().size;
    std::vector<double> w;
    w.reserve(at->atoms.size());
    for (const auto& a : at->atoms) w.push_back(a.rate * a.size);
    return at->atoms[rng.categorical(w, mean_)].size;
  }
  return std::exp(sample_size_biased_log(rng));
}

}  // namespace spinelab
