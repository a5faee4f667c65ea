#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "spinelab/rng.hpp"

namespace spinelab {

/// Finite measure sum_k rate_k * delta_{size_k} on (0, inf).
struct Atoms {
  struct Atom {
    double size;
    double rate;
  };
  std::vector<Atom> atoms;
};

/// total_rate times the probability density proportional to
/// theta^-2 (log theta)^-beta on [e, inf).
///
/// Finite mean for beta > 1; the theta log theta moment is finite only for
/// beta > 2, which makes this the reference family for heavy-tailed jumps.
struct LogPareto {
  double total_rate;
  double beta;
};

/// Finite-activity, finite-mean jump measure with the moments and samplers the
/// simulators and the cumulant solver need.
///
/// Integrals over a LogPareto measure are carried out in s = log(theta), where
/// the measure reads (rate/Z) e^{-s} s^{-beta} ds on [1, inf).
class JumpMeasure {
 public:
  static JumpMeasure atoms(std::vector<Atoms::Atom> atoms);
  static JumpMeasure log_pareto(double total_rate, double beta);

  bool is_atoms() const noexcept { return std::holds_alternative<Atoms>(family_); }
  const std::variant<Atoms, LogPareto>& family() const noexcept { return family_; }

  double total_rate() const noexcept { return total_rate_; }
  double mean() const noexcept { return mean_; }
  /// Normalizer Z = int_1^inf e^{-s} s^{-beta} ds; 0 for Atoms.
  double normalizer() const noexcept { return normalizer_; }
  /// int theta^2 Pi(dtheta); +inf for LogPareto.
  double second_moment() const noexcept;
  bool unbounded_support() const noexcept { return !is_atoms(); }

  /// int theta log+(s theta) Pi(dtheta); exactly +inf for LogPareto, beta <= 2.
  double llogl_moment(double scale) const;

  /// int (1 - e^{-y theta}) Pi(dtheta), y >= 0.
  double laplace_deficit(double y) const;
  /// int theta e^{-y theta} Pi(dtheta), y >= 0.
  double tilted_mean(double y) const;
  /// int (e^{-y theta} - 1 + y theta) Pi(dtheta), y >= 0.
  double compensated_laplace(double y) const;
  /// int theta (1 - e^{-y theta}) Pi(dtheta), y >= 0.
  double size_weighted_deficit(double y) const;

  /// theta ~ Pi / |Pi|.
  double sample_plain(Rng& rng) const;
  /// theta ~ theta Pi(dtheta) / mean. May return +inf for LogPareto when the
  /// draw exceeds the double range; use sample_size_biased_log for marks.
  double sample_size_biased(Rng& rng) const;
  /// log(theta) for theta ~ theta Pi(dtheta) / mean; always finite.
  double sample_size_biased_log(Rng& rng) const;

 private:
  explicit JumpMeasure(std::variant<Atoms, LogPareto> family);

  std::variant<Atoms, LogPareto> family_;
  double total_rate_ = 0.0;
  double mean_ = 0.0;
  double normalizer_ = 0.0;
};

/// int_1^inf e^{-s} s^{-beta} ds by adaptive Gauss-Kronrod quadrature.
double log_pareto_normalizer(double beta);

}  // namespace spinelab
