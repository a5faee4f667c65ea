#pragma once

#include <string>
#include <vector>

#include "spinelab/linalg.hpp"
#include "spinelab/model.hpp"

namespace spinelab {

struct PerronTriple {
  double Lambda = 0.0;
  Vector u;  // right eigenvector, sum u = 1
  Vector v;  // left eigenvector, sum u_i v_i = 1
};

/// Mean matrix, Perron data and the spine generator derived from them.
///
/// The spine is the CTMC with off-diagonal rates gamma(i) p_ij u_j / u_i; its
/// holding rate q(i) equals Lambda + a(i) by the eigen-relation A u = Lambda u.
/// h is the right eigenvector scaled to unit Euclidean norm (counting measure
/// on types) and h_hat the matching left eigenvector with (h, h_hat) = 1.
struct SpectralData {
  Matrix A;
  double Lambda = 0.0;
  Vector u;
  Vector v;
  Vector h;
  Vector h_hat;
  double lambda1 = 0.0;  // = -Lambda
  double c_norm = 0.0;
  Vector gamma;
  Vector q;
  Matrix Q_spine;
  Matrix pi_h;
  Vector rho;
  double gap = 0.0;  // Lambda minus the largest real part of the rest of the spectrum

  int types() const noexcept { return static_cast<int>(A.rows()); }
};

/// A_ij = gamma(i) p_ij - a(i) delta_ij
Matrix build_A(const ModelSpec& spec);

/// Power iteration on e^{A s}, s = 1 / (1 + max |A_ij|), accelerated by
/// repeated squaring, then a Rayleigh-quotient estimate of Lambda.
/// Throws NumericalError for reducible A or when residual checks fail.
PerronTriple perron(const Matrix& A);

SpectralData derive_spine(const ModelSpec& spec, const Matrix& A, const PerronTriple& triple);

/// validate_spec + build_A + perron + derive_spine.
SpectralData analyse(const ModelSpec& spec);

/// Violated SpectralData invariants at the given tolerance (empty when clean).
std::vector<std::string> check_spectral_invariants(const ModelSpec& spec, const SpectralData& sd, double tol = 1e-10);

/// M(t) = e^{A t}
Matrix mean_matrix(const SpectralData& sd, double t);

/// Spine transition density with respect to rho:
/// e^{-Lambda t} M(t)_ij / (u_i v_j).
double ptilde(const SpectralData& sd, double t, int i, int j);
Matrix ptilde_matrix(const SpectralData& sd, double t);

/// e^{Q_spine t}
Matrix spine_transition(const SpectralData& sd, double t);

struct Assumption4Point {
  double t;
  double deviation;  // max_{i,j} |ptilde(t,i,j) - 1|
};

struct Assumption4Report {
  std::vector<Assumption4Point> points;
  double tolerance = 0.0;
  bool tail_non_increasing = false;
  bool final_below_tolerance = false;
  bool passes() const noexcept { return tail_non_increasing && final_below_tolerance; }
};

/// Tail is the second half of the grid; the final point must be below tol.
Assumption4Report assumption4_scan(const SpectralData& sd, const std::vector<double>& t_grid, double tol);

}  // namespace spinelab
