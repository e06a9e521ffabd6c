#pragma once

// Data-parallel inner loops. Every kernel has a serial reference path
// that the parallel path must reproduce bit for bit; the serial path is
// what the tests and the benchmark compare against.

#include "iadl/types.hpp"

#include <string>

namespace iadl {

enum class Execution { serial, parallel };

namespace kernels {

/// Number of OpenMP threads available to the parallel path (1 without OpenMP).
int thread_count();

/// Elementwise w_ij = 1/(|a_ij| + epsilon).
Matrix weights(const Matrix& a, double epsilon, Execution exec);

/*
 * Row-wise sparse coding step.
 *
 * For every row a^i of `a` whose weighted norm under w^i exceeds phi_i the
 * row is replaced by its projection onto the weighted l1 ball. Returns, per
 * row, the weighted norm of the resulting row minus phi_i, clamped at zero.
 */
Vector project_rows(Matrix& a, const Matrix& w, const Vector& phi, Execution exec);

/// Per-row weighted l1 norms sum_j w_ij |s_ij|.
Vector row_weighted_norms(const Matrix& s, const Matrix& w, Execution exec);

/// Column-wise dictionary projection: similarity balls for the first
/// delta.cols() atoms, l2 balls for the rest. Returns per-column violation.
Vector project_columns(Matrix& b, const Matrix& delta, double c_delta, double c_d, Execution exec);

/// Squared Frobenius norm of x - d * s.
double residual_sq(const Matrix& x, const Matrix& d, const Matrix& s, Execution exec);

}  // namespace kernels
}  // namespace iadl
