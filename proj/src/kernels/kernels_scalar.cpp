#include "spinelab/kernels/kernels.hpp"

namespace spinelab::kernels::scalar {

double leaf_sum(const double* x, std::size_t n) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  const std::size_t body = n - n % 4;
  for (std::size_t i = 0; i < body; i += 4) {
    l0 += x[i];
    l1 += x[i + 1];
    l2 += x[i + 2];
    l3 += x[i + 3];
  }
  double total = (l0 + l1) + (l2 + l3);
  for (std::size_t i = body; i < n; ++i) total += x[i];
  return total;
}

void weighted_rows(const double* cols, std::size_t n, std::size_t k, const double* w, double* out) {
  for (std::size_t p = 0; p < n; ++p) out[p] = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double* col = cols + j * n;
    const double wj = w[j];
    for (std::size_t p = 0; p < n; ++p) out[p] += wj * col[p];
  }
}

void matvec(const double* m, std::size_t k, const double* x, double* y) {
  for (std::size_t i = 0; i < k; ++i) y[i] = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double* col = m + j * k;
    const double xj = x[j];
    for (std::size_t i = 0; i < k; ++i) y[i] += col[i] * xj;
  }
}

}  // namespace spinelab::kernels::scalar
