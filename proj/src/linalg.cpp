#include "spinelab/linalg.hpp"

#include <array>
#include <cmath>

namespace spinelab {
namespace {

// Higham (2005) degree thresholds on the 1-norm for unit backward error.
constexpr std::array<double, 4> kTheta = {1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                                          2.097847961257068e0};
constexpr double kTheta13 = 5.371920351148152e0;

Matrix pade_low(const Matrix& a, int degree) {
  static const double b3[] = {120., 60., 12., 1.};
  static const double b5[] = {30240., 15120., 3360., 420., 30., 1.};
  static const double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static const double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                              2162160.,     110880.,      3960.,        90.,         1.};
  const double* b = degree == 3 ? b3 : degree == 5 ? b5 : degree == 7 ? b7 : b9;
  const auto n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix power = ident;
  Matrix odd = Matrix::Zero(n, n);
  Matrix even = Matrix::Zero(n, n);
  for (int k = 0; k <= degree; k += 2) {
    even += b[k] * power;
    odd += b[k + 1] * power;
    power = power * a2;
  }
  const Matrix u = a * odd;
  return (even - u).partialPivLu().solve(even + u);
}

Matrix pade13(const Matrix& a) {
  static const double b[] = {64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
                             129060195264000.,   10559470521600.,    670442572800.,    33522128640.,
                             1323241920.,        40840800.,          960960.,          16380.,
                             182.,               1.};
  const auto n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

double norm_inf(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

Matrix matrix_exponential(const Matrix& a) {
  const auto n = a.rows();
  if (n == 0) return a;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) return Matrix::Identity(n, n);
  constexpr std::array<int, 4> degrees = {3, 5, 7, 9};
  for (std::size_t k = 0; k < degrees.size(); ++k)
    if (norm1 <= kTheta[k]) return pade_low(a, degrees[k]);
  int squarings = 0;
  if (norm1 > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  Matrix r = pade13(a * std::ldexp(1.0, -squarings));
  for (int s = 0; s < squarings; ++s) r = r * r;
  return r;
}

Matrix matrix_exponential(const Matrix& a, double t) { return matrix_exponential(a * t); }

}  // namespace spinelab
