#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spinelab/jump_measure.hpp"
#include "spinelab/linalg.hpp"

namespace spinelab {

/// Finite-type branching model with mechanism, for x = type i and f(i) = lambda,
///   psi(i, f) = a(i) lambda + int (e^{-lambda theta} - 1 + lambda theta) PiL(i, dtheta)
///             - c(i) pi(i, f) - int (1 - e^{-theta pi(i, f)}) PiNL(i, dtheta).
/// There is no quadratic (diffusive) term.
struct ModelSpec {
  int K = 0;
  Vector a;
  Vector c;
  Matrix pi;  // row-stochastic, zero diagonal
  std::vector<std::optional<JumpMeasure>> piL;
  std::vector<std::optional<JumpMeasure>> piNL;

  int types() const noexcept { return K; }
  double local_mean(int i) const { return piL[i] ? piL[i]->mean() : 0.0; }
  double nonlocal_mean(int i) const { return piNL[i] ? piNL[i]->mean() : 0.0; }
  double local_rate(int i) const { return piL[i] ? piL[i]->total_rate() : 0.0; }
  double nonlocal_rate(int i) const { return piNL[i] ? piNL[i]->total_rate() : 0.0; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  Vector gamma;
  bool ok() const noexcept { return violations.empty(); }
};

/// Checks every model invariant; never throws on a bad model.
ValidationReport validate_spec(const ModelSpec& spec);

/// Throws SpecError listing every violation.
void require_valid(const ModelSpec& spec);

/// gamma(i) = c(i) + int theta PiNL(i, dtheta)
double gamma(const ModelSpec& spec, int i);
Vector gamma_vector(const ModelSpec& spec);

/// Strong connectivity of the graph with an edge i -> j whenever m(i,j) != 0
/// or i == j.
bool is_irreducible(const Matrix& m);

ModelSpec parse_spec_json(std::string_view text);
ModelSpec load_spec_file(const std::string& path);
std::string spec_to_json(const ModelSpec& spec);

/// Model with every type index relabelled: new type k is old type perm[k].
ModelSpec permute_types(const ModelSpec& spec, const std::vector<int>& perm);

}  // namespace spinelab
