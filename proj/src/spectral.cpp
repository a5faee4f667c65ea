#include "spinelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spinelab/error.hpp"

namespace spinelab {

Matrix build_A(const ModelSpec& spec) {
  const Vector g = gamma_vector(spec);
  Matrix A(spec.K, spec.K);
  for (int i = 0; i < spec.K; ++i)
    for (int j = 0; j < spec.K; ++j) A(i, j) = g[i] * spec.pi(i, j) - (i == j ? spec.a[i] : 0.0);
  return A;
}

PerronTriple perron(const Matrix& A) {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n) throw NumericalError("perron: A must be a non-empty square matrix");
  Matrix off = A;
  off.diagonal().setZero();
  if (!is_irreducible(off)) throw NumericalError("perron: A is reducible, the Perron root need not be simple");

  const double shift = 1.0 / (1.0 + A.cwiseAbs().maxCoeff());
  const Matrix step = matrix_exponential(A, shift);
  if ((step.array() <= 0.0).any()) throw NumericalError("perron: e^{As} is not entrywise positive");

  // Squaring B = e^{A s 2^k} drives it to the rank-one projector u v^T.
  Matrix power = step / step.maxCoeff();
  Vector u = power * Vector::Ones(n);
  u /= u.sum();
  constexpr int kMaxSquarings = 80;
  bool converged = false;
  for (int k = 0; k < kMaxSquarings; ++k) {
    power = power * power;
    const double scale = power.maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) break;
    power /= scale;
    Vector next = power * Vector::Ones(n);
    next /= next.sum();
    const double change = (next - u).cwiseAbs().maxCoeff();
    u = next;
    if (change <= 1e-15 && k >= 4) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericalError("perron: power iteration did not converge (near-reducible or ill-conditioned A)");
  Vector v = power.transpose() * Vector::Ones(n);

  // Plain power steps with the positive matrix clean up rounding from squaring.
  for (int k = 0; k < 4; ++k) {
    u = step * u;
    u /= u.sum();
    v = step.transpose() * v;
    v /= v.sum();
  }
  if ((u.array() <= 0.0).any() || (v.array() <= 0.0).any())
    throw NumericalError("perron: eigenvectors lost strict positivity");

  PerronTriple out;
  out.Lambda = v.dot(A * u) / v.dot(u);
  out.u = u;
  out.v = v / u.dot(v);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double right = (A * out.u - out.Lambda * out.u).cwiseAbs().maxCoeff();
  const double left = (A.transpose() * out.v - out.Lambda * out.v).cwiseAbs().maxCoeff();
  if (right > 1e-10 * scale || left > 1e-10 * scale * std::max(1.0, out.v.maxCoeff())) {
    std::ostringstream os;
    os << "perron: eigen-residual too large (right " << right << ", left " << left << ")";
    throw NumericalError(os.str());
  }
  return out;
}

namespace {

double spectral_gap(const Matrix& A, double Lambda) {
  Eigen::EigenSolver<Matrix> solver(A, false);
  const auto& ev = solver.eigenvalues();
  // Drop the eigenvalue nearest Lambda; the rest bound the relaxation rate.
  Eigen::Index nearest = 0;
  for (Eigen::Index k = 1; k < ev.size(); ++k)
    if (std::abs(ev[k] - Lambda) < std::abs(ev[nearest] - Lambda)) nearest = k;
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (k != nearest) second = std::max(second, ev[k].real());
  return Lambda - second;
}

}  // namespace

SpectralData derive_spine(const ModelSpec& spec, const Matrix& A, const PerronTriple& triple) {
  SpectralData sd;
  const int K = spec.K;
  sd.A = A;
  sd.Lambda = triple.Lambda;
  sd.lambda1 = -triple.Lambda;
  sd.u = triple.u;
  sd.v = triple.v;
  sd.c_norm = 1.0 / sd.u.norm();
  sd.h = sd.c_norm * sd.u;
  sd.h_hat = sd.v / sd.c_norm;
  sd.gamma = gamma_vector(spec);
  sd.q.resize(K);
  sd.Q_spine = Matrix::Zero(K, K);
  sd.pi_h = Matrix::Zero(K, K);
  for (int i = 0; i < K; ++i) {
    const double pi_h_norm = spec.pi.row(i).dot(sd.h);
    double total = 0.0;
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      const double rate = sd.gamma[i] * spec.pi(i, j) * sd.u[j] / sd.u[i];
      sd.Q_spine(i, j) = rate;
      total += rate;
      sd.pi_h(i, j) = sd.h[j] * spec.pi(i, j) / pi_h_norm;
    }
    sd.q[i] = total;
    sd.Q_spine(i, i) = -total;
  }
  sd.rho = sd.u.cwiseProduct(sd.v);
  sd.gap = spectral_gap(A, sd.Lambda);

  const auto violations = check_spectral_invariants(spec, sd);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "spectral invariants violated:";
    for (const auto& v : violations) os << "\n  - " << v;
    throw NumericalError(os.str());
  }
  return sd;
}

SpectralData analyse(const ModelSpec& spec) {
  require_valid(spec);
  const Matrix A = build_A(spec);
  return derive_spine(spec, A, perron(A));
}

std::vector<std::string> check_spectral_invariants(const ModelSpec& spec, const SpectralData& sd, double tol) {
  std::vector<std::string> out;
  const int K = sd.types();
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
  };
  const double scale = std::max(1.0, sd.A.cwiseAbs().maxCoeff());
  check(std::abs(sd.u.sum() - 1.0) <= tol, "sum u != 1");
  check(std::abs(sd.u.dot(sd.v) - 1.0) <= tol, "sum u_i v_i != 1");
  check((sd.A * sd.u - sd.Lambda * sd.u).cwiseAbs().maxCoeff() <= tol * scale, "A u != Lambda u");
  const double v_scale = tol * scale * std::max(1.0, sd.v.maxCoeff());
  check((sd.A.transpose() * sd.v - sd.Lambda * sd.v).cwiseAbs().maxCoeff() <= v_scale, "v^T A != Lambda v^T");
  check(std::abs(sd.h.squaredNorm() - 1.0) <= tol, "||h||^2 != 1");
  check(std::abs(sd.h.dot(sd.h_hat) - 1.0) <= tol, "(h, h_hat) != 1");
  check((sd.u.array() > 0.0).all() && (sd.v.array() > 0.0).all(), "Perron vectors not strictly positive");
  for (int i = 0; i < K; ++i) {
    check(std::abs(sd.q[i] - (sd.Lambda + spec.a[i])) <= tol * scale,
          "q(" + std::to_string(i) + ") != Lambda + a(" + std::to_string(i) + ")");
    check(std::abs(sd.Q_spine.row(i).sum()) <= 1e-12 * scale,
          "Q_spine row " + std::to_string(i) + " does not sum to 0");
    for (int j = 0; j < K; ++j)
      if (j != i) check(sd.Q_spine(i, j) >= 0.0, "negative off-diagonal spine rate");
    check(std::abs(sd.pi_h.row(i).sum() - 1.0) <= 1e-12, "pi_h row " + std::to_string(i) + " does not sum to 1");
  }
  check(std::abs(sd.rho.sum() - 1.0) <= tol, "sum rho != 1");
  return out;
}

Matrix mean_matrix(const SpectralData& sd, double t) { return matrix_exponential(sd.A, t); }

Matrix ptilde_matrix(const SpectralData& sd, double t) {
  const Matrix M = mean_matrix(sd, t);
  const double damp = std::exp(-sd.Lambda * t);
  Matrix out(M.rows(), M.cols());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out(i, j) = damp * M(i, j) / (sd.u[i] * sd.v[j]);
  return out;
}

double ptilde(const SpectralData& sd, double t, int i, int j) {
  return std::exp(-sd.Lambda * t) * mean_matrix(sd, t)(i, j) / (sd.u[i] * sd.v[j]);
}

Matrix spine_transition(const SpectralData& sd, double t) { return matrix_exponential(sd.Q_spine, t); }

Assumption4Report assumption4_scan(const SpectralData& sd, const std::vector<double>& t_grid, double tol) {
  Assumption4Report report;
  report.tolerance = tol;
  for (double t : t_grid) {
    const Matrix p = ptilde_matrix(sd, t);
    report.points.push_back({t, (p.array() - 1.0).abs().maxCoeff()});
  }
  if (report.points.empty()) return report;
  bool monotone = true;
  const std::size_t start = report.points.size() / 2;
  for (std::size_t k = start + 1; k < report.points.size(); ++k)
    if (report.points[k].deviation > report.points[k - 1].deviation + 1e-15) monotone = false;
  report.tail_non_increasing = monotone;
  report.final_below_tolerance = report.points.back().deviation < tol;
  return report;
}

}  // namespace spinelab
