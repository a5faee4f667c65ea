#pragma once

// Shared model builders for the unit tests.

#include <cmath>
#include <random>

#include "spinelab/model.hpp"
#include "spinelab/spectral.hpp"

namespace fixtures {

using spinelab::JumpMeasure;
using spinelab::Matrix;
using spinelab::ModelSpec;
using spinelab::Vector;

inline ModelSpec blank(int K) {
  ModelSpec s;
  s.K = K;
  s.a = Vector::Zero(K);
  s.c = Vector::Zero(K);
  s.pi = Matrix::Zero(K, K);
  s.piL.assign(K, std::nullopt);
  s.piNL.assign(K, std::nullopt);
  return s;
}

// a = 0, c = (1, 1), p_12 = p_21 = 1, no jumps: A = [[0,1],[1,0]].
inline ModelSpec sym2() {
  ModelSpec s = blank(2);
  s.c << 1.0, 1.0;
  s.pi << 0.0, 1.0, 1.0, 0.0;
  return s;
}

// Same A as sym2, with unit local atoms and half the transfer carried by
// non-local atoms.
inline ModelSpec sym2atoms() {
  ModelSpec s = sym2();
  s.c << 0.5, 0.5;
  for (int i = 0; i < 2; ++i) {
    s.piL[i] = JumpMeasure::atoms({{1.0, 1.0}});
    s.piNL[i] = JumpMeasure::atoms({{1.0, 0.5}});
  }
  return s;
}

inline ModelSpec ring3atoms() {
  ModelSpec s = blank(3);
  s.a << 0.5, 1.0, 1.5;
  s.c << 0.5, 1.0, 1.0;
  s.pi << 0.0, 0.7, 0.3, 0.4, 0.0, 0.6, 0.5, 0.5, 0.0;
  s.piL[0] = JumpMeasure::atoms({{0.5, 2.0}, {2.0, 0.5}});
  s.piL[2] = JumpMeasure::atoms({{1.0, 1.0}});
  s.piNL[1] = JumpMeasure::atoms({{1.5, 0.5}});
  s.piNL[2] = JumpMeasure::atoms({{0.5, 1.0}});
  return s;
}

// Irreducible spec with K types, dense kernel, mixed jump measures.
inline ModelSpec random_spec(std::mt19937_64& gen, int K, bool allow_logpareto = true) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModelSpec s = blank(K);
  for (int i = 0; i < K; ++i) {
    s.a[i] = 2.0 * unit(gen);
    s.c[i] = 0.1 + unit(gen);
    double row = 0.0;
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      s.pi(i, j) = 0.05 + unit(gen);
      row += s.pi(i, j);
    }
    s.pi.row(i) /= row;
    const double pick = unit(gen);
    if (pick < 0.4)
      s.piL[i] = JumpMeasure::atoms({{0.2 + unit(gen), 0.5 + unit(gen)}, {1.0 + 2.0 * unit(gen), 0.3 * unit(gen)}});
    else if (pick < 0.6 && allow_logpareto)
      s.piL[i] = JumpMeasure::log_pareto(0.2 + unit(gen), 2.5 + unit(gen));
    if (unit(gen) < 0.5) s.piNL[i] = JumpMeasure::atoms({{0.5 + unit(gen), 0.2 + unit(gen)}});
  }
  return s;
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace fixtures
