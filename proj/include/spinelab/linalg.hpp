#pragma once

#include <Eigen/Dense>

namespace spinelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// e^{A t} by scaling and squaring around a degree-13 Pade approximant.
Matrix matrix_exponential(const Matrix& a, double t);
Matrix matrix_exponential(const Matrix& a);

/// max_i sum_j |m_ij|
double norm_inf(const Matrix& m);

}  // namespace spinelab
