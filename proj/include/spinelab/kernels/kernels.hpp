#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace spinelab::kernels {

// Data-parallel loops behind the ensemble estimators and the flow step.
//
// Every variant evaluates the same arithmetic in the same order (no FMA
// contraction, fixed lane layout), so scalar and SIMD results are bit-equal.
// Reports therefore do not depend on which variant the CPU selects.

enum class Isa { Scalar, Avx2 };

std::string_view name(Isa isa);

/// Variant in use. Chosen once from CPUID; SPINELAB_SIMD=scalar forces the
/// reference path.
Isa active_isa();
bool isa_supported(Isa isa);
/// Test hook; returns the previous setting.
Isa force_isa(Isa isa);

/// Blocked pairwise sum: leaves of up to 256 values are reduced in four
/// interleaved lanes, combined as (l0 + l1) + (l2 + l3), plus a sequential tail.
double pairwise_sum(std::span<const double> x);

/// out[p] = sum_k w[k] * cols[k * n + p], k ascending (columns of an n x K
/// column-major block).
void weighted_rows(const double* cols, std::size_t n, std::size_t k, const double* w, double* out);

/// y = M x for a K x K column-major matrix, accumulating over columns in order.
void matvec(const double* m, std::size_t k, const double* x, double* y);

namespace scalar {
double leaf_sum(const double* x, std::size_t n);
void weighted_rows(const double* cols, std::size_t n, std::size_t k, const double* w, double* out);
void matvec(const double* m, std::size_t k, const double* x, double* y);
}  // namespace scalar

namespace avx2 {
double leaf_sum(const double* x, std::size_t n);
void weighted_rows(const double* cols, std::size_t n, std::size_t k, const double* w, double* out);
void matvec(const double* m, std::size_t k, const double* x, double* y);
}  // namespace avx2

}  // namespace spinelab::kernels
