#pragma once

#include "iadl/types.hpp"

namespace iadl {

using VectorRef = Eigen::Ref<const Vector>;

/// w_i = 1 / (|x_i| + epsilon).
Vector compute_weights(const VectorRef& x, double epsilon);

/// Elementwise weights for a whole matrix.
Matrix compute_weight_matrix(const Matrix& a, double epsilon);

/// sum_i w_i |x_i|
double weighted_l1_norm(const VectorRef& x, const VectorRef& w);

/// sum_ij w_ij |s_ij|, i.e. tr(|S| W^T).
double weighted_l1_matrix_norm(const Matrix& s, const Matrix& w);

/*
 * Euclidean projection onto { x : sum_i w_i |x_i| <= phi }.
 *
 * The minimiser is a weighted soft threshold
 *     x_i = sign(v_i) max(|v_i| - gamma w_i, 0)
 * where gamma > 0 makes the constraint active. gamma is found by sorting
 * the breakpoints |v_i| / w_i and solving the piecewise-linear equation
 * inside the bracketing interval. When the weights span more than twelve
 * orders of magnitude the threshold is bracketed by bisection instead.
 *
 * Returns v unchanged if it already lies inside the ball.
 */
Vector project_weighted_l1_ball(const VectorRef& v, const VectorRef& w, double phi);

/// Threshold gamma used by project_weighted_l1_ball (0 when v is feasible).
double weighted_l1_threshold(const VectorRef& v, const VectorRef& w, double phi);

/// Projects vec(S) onto the weighted l1 ball of radius Phi with weights vec(W).
Matrix project_weighted_l1_matrix_ball(const Matrix& s, const Matrix& w, double phi_total);

/// Projection onto { x : ||x - delta||^2 <= c_delta }.
Vector project_similarity_ball(const VectorRef& b, const VectorRef& delta, double c_delta);

/// Projection onto { x : ||x||^2 <= c_d }.
Vector project_l2_ball(const VectorRef& b, double c_d);

}  // namespace iadl
