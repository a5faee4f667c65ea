#include "spinelab/model.hpp"

#include <cmath>
#include <sstream>

#include "spinelab/error.hpp"

namespace spinelab {

double gamma(const ModelSpec& spec, int i) { return spec.c[i] + spec.nonlocal_mean(i); }

Vector gamma_vector(const ModelSpec& spec) {
  Vector g(spec.K);
  for (int i = 0; i < spec.K; ++i) g[i] = gamma(spec, i);
  return g;
}

bool is_irreducible(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return false;
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        const double w = transpose ? m(j, i) : m(i, j);
        if (w != 0.0 && !seen[j]) {
          seen[j] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == n;
  };
  return reaches_all(false) && reaches_all(true);
}

ValidationReport validate_spec(const ModelSpec& spec) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  const int K = spec.K;
  if (K < 1) {
    fail("K must be a positive integer");
    return report;
  }
  if (spec.a.size() != K || spec.c.size() != K || spec.pi.rows() != K || spec.pi.cols() != K ||
      static_cast<int>(spec.piL.size()) != K || static_cast<int>(spec.piNL.size()) != K) {
    fail("dimension mismatch: a, c, pi, piL, piNL must all have K entries");
    return report;
  }
  for (int i = 0; i < K; ++i) {
    if (!std::isfinite(spec.a[i])) fail("a[" + std::to_string(i) + "] is not finite");
    if (!(spec.c[i] >= 0.0) || !std::isfinite(spec.c[i])) fail("c[" + std::to_string(i) + "] must be finite and >= 0");
    double row = 0.0;
    bool row_ok = true;
    for (int j = 0; j < K; ++j) {
      if (!(spec.pi(i, j) >= 0.0)) row_ok = false;
      row += spec.pi(i, j);
    }
    if (!row_ok) fail("pi row " + std::to_string(i) + " has a negative entry");
    if (std::abs(row - 1.0) > 1e-12) fail("pi row " + std::to_string(i) + " does not sum to 1");
    if (spec.pi(i, i) != 0.0) fail("pi has a nonzero diagonal entry at type " + std::to_string(i));
  }
  report.gamma = gamma_vector(spec);
  bool any_active = false;
  for (int i = 0; i < K; ++i) any_active = any_active || report.gamma[i] > 0.0;
  if (!any_active) fail("no non-local activity: gamma(i) = 0 for every type");

  Matrix offspring(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) offspring(i, j) = report.gamma[i] * spec.pi(i, j);
  if (any_active && !is_irreducible(offspring)) fail("mean matrix A is reducible");
  return report;
}

void require_valid(const ModelSpec& spec) {
  const auto report = validate_spec(spec);
  if (report.ok()) return;
  std::ostringstream os;
  os << "invalid model:";
  for (const auto& v : report.violations) os << "\n  - " << v;
  throw SpecError(os.str());
}

ModelSpec permute_types(const ModelSpec& spec, const std::vector<int>& perm) {
  ModelSpec out;
  out.K = spec.K;
  out.a.resize(spec.K);
  out.c.resize(spec.K);
  out.pi.resize(spec.K, spec.K);
  out.piL.resize(spec.K);
  out.piNL.resize(spec.K);
  for (int k = 0; k < spec.K; ++k) {
    const int old = perm[k];
    out.a[k] = spec.a[old];
    out.c[k] = spec.c[old];
    out.piL[k] = spec.piL[old];
    out.piNL[k] = spec.piNL[old];
    for (int l = 0; l < spec.K; ++l) out.pi(k, l) = spec.pi(old, perm[l]);
  }
  return out;
}

}  // namespace spinelab
