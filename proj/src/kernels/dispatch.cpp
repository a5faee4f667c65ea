#include <atomic>
#include <cstdlib>
#include <string>

#include "spinelab/kernels/kernels.hpp"

namespace spinelab::kernels {
namespace {

constexpr std::size_t kLeaf = 256;

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("SPINELAB_SIMD"); env && std::string(env) == "scalar") return Isa::Scalar;
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<int>& current() {
  static std::atomic<int> isa{static_cast<int>(detect())};
  return isa;
}

double pairwise(const double* x, std::size_t n, Isa isa) {
  if (n <= kLeaf) return isa == Isa::Avx2 ? avx2::leaf_sum(x, n) : scalar::leaf_sum(x, n);
  const std::size_t half = (n / 2 + kLeaf - 1) / kLeaf * kLeaf;
  return pairwise(x, half, isa) + pairwise(x + half, n - half, isa);
}

}  // namespace

std::string_view name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() { return static_cast<Isa>(current().load(std::memory_order_relaxed)); }

Isa force_isa(Isa isa) {
  if (!isa_supported(isa)) isa = Isa::Scalar;
  return static_cast<Isa>(current().exchange(static_cast<int>(isa)));
}

double pairwise_sum(std::span<const double> x) { return pairwise(x.data(), x.size(), active_isa()); }

void weighted_rows(const double* cols, std::size_t n, std::size_t k, const double* w, double* out) {
  if (active_isa() == Isa::Avx2)
    avx2::weighted_rows(cols, n, k, w, out);
  else
    scalar::weighted_rows(cols, n, k, w, out);
}

void matvec(const double* m, std::size_t k, const double* x, double* y) {
  if (active_isa() == Isa::Avx2)
    avx2::matvec(m, k, x, y);
  else
    scalar::matvec(m, k, x, y);
}

}  // namespace spinelab::kernels
