#include "spinelab/kernels/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)
#include <immintrin.h>

namespace spinelab::kernels::avx2 {

double leaf_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = n - n % 4;
  for (std::size_t i = 0; i < body; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (std::size_t i = body; i < n; ++i) total += x[i];
  return total;
}

void weighted_rows(const double* cols, std::size_t n, std::size_t k, const double* w, double* out) {
  const std::size_t body = n - n % 4;
  for (std::size_t p = 0; p < body; p += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k; ++j) {
      const __m256d col = _mm256_loadu_pd(cols + j * n + p);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(w[j]), col));
    }
    _mm256_storeu_pd(out + p, acc);
  }
  for (std::size_t p = body; p < n; ++p) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += w[j] * cols[j * n + p];
    out[p] = acc;
  }
}

void matvec(const double* m, std::size_t k, const double* x, double* y) {
  const std::size_t body = k - k % 4;
  for (std::size_t i = 0; i < body; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k; ++j)
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(m + j * k + i), _mm256_set1_pd(x[j])));
    _mm256_storeu_pd(y + i, acc);
  }
  for (std::size_t i = body; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += m[j * k + i] * x[j];
    y[i] = acc;
  }
}

}  // namespace spinelab::kernels::avx2

#else

// Non-x86 builds route the AVX2 entry points to the reference loops;
// isa_supported(Isa::Avx2) reports false there.
namespace spinelab::kernels::avx2 {
double leaf_sum(const double* x, std::size_t n) { return scalar::leaf_sum(x, n); }
void weighted_rows(const double* cols, std::size_t n, std::size_t k, const double* w, double* out) {
  scalar::weighted_rows(cols, n, k, w, out);
}
void matvec(const double* m, std::size_t k, const double* x, double* y) { scalar::matvec(m, k, x, y); }
}  // namespace spinelab::kernels::avx2

#endif
