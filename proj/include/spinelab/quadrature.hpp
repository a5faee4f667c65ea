#pragma once

#include <vector>

namespace spinelab {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (Newton iteration on P_n).
GaussRule gauss_legendre(int n);

/// Nodes and weights of a composite rule over [lo, hi] with `panels` equal panels.
GaussRule composite_rule(const GaussRule& base, double lo, double hi, int panels);

}  // namespace spinelab
