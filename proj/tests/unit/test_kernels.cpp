#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "spinelab/kernels/kernels.hpp"

using namespace spinelab::kernels;

namespace {

std::vector<double> make_data(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> mag(-8.0, 8.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(gen) * std::exp2(mag(gen));
  return x;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

struct IsaGuard {
  Isa saved;
  explicit IsaGuard(Isa isa) : saved(force_isa(isa)) {}
  ~IsaGuard() { force_isa(saved); }
};

const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 255, 256, 257, 511, 1000, 4097, 100003};

}  // namespace

TEST_CASE("isa selection") {
  CHECK(isa_supported(Isa::Scalar));
  CHECK(name(Isa::Scalar) == "scalar");
  CHECK(name(Isa::Avx2) == "avx2");
  {
    IsaGuard g(Isa::Scalar);
    CHECK(active_isa() == Isa::Scalar);
  }
  IsaGuard g(Isa::Avx2);
  CHECK(active_isa() == (isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar));
}

TEST_CASE("leaf sums are bit-equal across variants") {
  if (!isa_supported(Isa::Avx2)) return;
  std::mt19937_64 gen(1);
  for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 100, 255, 256}) {
    const auto x = make_data(gen, n);
    CAPTURE(n);
    CHECK(bit_equal(scalar::leaf_sum(x.data(), n), avx2::leaf_sum(x.data(), n)));
  }
}

TEST_CASE("pairwise sum is bit-equal and accurate") {
  std::mt19937_64 gen(2);
  for (std::size_t n : kLengths) {
    const auto x = make_data(gen, n);
    double s_scalar, s_simd;
    {
      IsaGuard g(Isa::Scalar);
      s_scalar = pairwise_sum(x);
    }
    {
      IsaGuard g(Isa::Avx2);
      s_simd = pairwise_sum(x);
    }
    CAPTURE(n);
    CHECK(bit_equal(s_scalar, s_simd));
    long double ref = 0.0L, abs_sum = 0.0L;
    for (double v : x) {
      ref += v;
      abs_sum += std::fabs(v);
    }
    CHECK(std::fabs(double(ref) - s_scalar) <= 1e-14 * double(abs_sum) + 1e-300);
  }
  // exact on integers
  std::vector<double> ints(10000);
  for (std::size_t k = 0; k < ints.size(); ++k) ints[k] = double(k);
  CHECK(pairwise_sum(ints) == 49995000.0);
}

TEST_CASE("weighted rows are bit-equal across variants") {
  if (!isa_supported(Isa::Avx2)) return;
  std::mt19937_64 gen(3);
  for (std::size_t k : {1, 2, 3, 5, 8}) {
    for (std::size_t n : {1, 3, 4, 5, 17, 1000}) {
      const auto cols = make_data(gen, n * k);
      const auto w = make_data(gen, k);
      std::vector<double> a(n), b(n);
      scalar::weighted_rows(cols.data(), n, k, w.data(), a.data());
      avx2::weighted_rows(cols.data(), n, k, w.data(), b.data());
      CAPTURE(k);
      CAPTURE(n);
      bool same = true;
      for (std::size_t p = 0; p < n; ++p) {
        same = same && bit_equal(a[p], b[p]);
        double ref = 0.0;
        for (std::size_t j = 0; j < k; ++j) ref += w[j] * cols[j * n + p];
        CHECK(bit_equal(a[p], ref));
      }
      CHECK(same);
    }
  }
}

TEST_CASE("matvec is bit-equal across variants and agrees with the definition") {
  std::mt19937_64 gen(4);
  for (std::size_t k : {1, 2, 3, 4, 5, 6, 7, 9, 16}) {
    const auto m = make_data(gen, k * k);
    const auto x = make_data(gen, k);
    std::vector<double> a(k), b(k), ref(k, 0.0);
    scalar::matvec(m.data(), k, x.data(), a.data());
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < k; ++i) ref[i] += m[j * k + i] * x[j];
    CAPTURE(k);
    for (std::size_t i = 0; i < k; ++i) CHECK(bit_equal(a[i], ref[i]));
    if (!isa_supported(Isa::Avx2)) continue;
    avx2::matvec(m.data(), k, x.data(), b.data());
    for (std::size_t i = 0; i < k; ++i) CHECK(bit_equal(a[i], b[i]));
  }
}
