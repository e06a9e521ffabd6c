#include "iadl/kernels.hpp"

#include "iadl/constraints.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace iadl::kernels {

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

double project_one_row(Matrix& a, const Matrix& weights, Index i, double phi) {
  const Vector row = a.row(i).transpose();
  const Vector w = weights.row(i).transpose();
  double norm = weighted_l1_norm(row, w);
  if (norm > phi) {
    const Vector projected = project_weighted_l1_ball(row, w, phi);
    a.row(i) = projected.transpose();
    norm = weighted_l1_norm(projected, w);
  }
  return std::max(0.0, norm - phi);
}

double project_one_column(Matrix& b, const Matrix& delta, Index j, double c_delta, double c_d) {
  const Vector col = b.col(j);
  if (j < delta.cols()) {
    const Vector projected = project_similarity_ball(col, delta.col(j), c_delta);
    b.col(j) = projected;
    return std::max(0.0, (projected - delta.col(j)).squaredNorm() - c_delta);
  }
  const Vector projected = project_l2_ball(col, c_d);
  b.col(j) = projected;
  return std::max(0.0, projected.squaredNorm() - c_d);
}

}  // namespace

Matrix weights(const Matrix& a, double epsilon, Execution exec) {
  if (!(epsilon > 0.0)) {
    throw std::domain_error("weights: epsilon must be positive");
  }
  Matrix w(a.rows(), a.cols());
  const Index rows = a.rows();
  if (exec == Execution::serial) {
    for (Index i = 0; i < rows; ++i) w.row(i) = (a.row(i).array().abs() + epsilon).inverse();
    return w;
  }
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    w.row(i) = (a.row(i).array().abs() + epsilon).inverse();
  }
  return w;
}

Vector project_rows(Matrix& a, const Matrix& w, const Vector& phi, Execution exec) {
  if (phi.size() != a.rows()) {
    throw std::domain_error("project_rows: one budget per row required");
  }
  if (w.rows() != a.rows() || w.cols() != a.cols()) {
    throw std::domain_error("project_rows: weight matrix shape mismatch");
  }
  const Index rows = a.rows();
  Vector violation(rows);
  if (exec == Execution::serial) {
    for (Index i = 0; i < rows; ++i) violation[i] = project_one_row(a, w, i, phi[i]);
    return violation;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < rows; ++i) {
    violation[i] = project_one_row(a, w, i, phi[i]);
  }
  return violation;
}

Vector row_weighted_norms(const Matrix& s, const Matrix& w, Execution exec) {
  if (w.rows() != s.rows() || w.cols() != s.cols()) {
    throw std::domain_error("row_weighted_norms: shape mismatch");
  }
  const Index rows = s.rows();
  Vector out(rows);
  if (exec == Execution::serial) {
    for (Index i = 0; i < rows; ++i) out[i] = (w.row(i).array() * s.row(i).array().abs()).sum();
    return out;
  }
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    out[i] = (w.row(i).array() * s.row(i).array().abs()).sum();
  }
  return out;
}

Vector project_columns(Matrix& b, const Matrix& delta, double c_delta, double c_d, Execution exec) {
  if (delta.cols() > b.cols() || (delta.cols() > 0 && delta.rows() != b.rows())) {
    throw std::domain_error("project_columns: task time courses do not fit the dictionary");
  }
  const Index cols = b.cols();
  Vector violation(cols);
  if (exec == Execution::serial) {
    for (Index j = 0; j < cols; ++j) violation[j] = project_one_column(b, delta, j, c_delta, c_d);
    return violation;
  }
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < cols; ++j) {
    violation[j] = project_one_column(b, delta, j, c_delta, c_d);
  }
  return violation;
}

double residual_sq(const Matrix& x, const Matrix& d, const Matrix& s, Execution exec) {
  const Index rows = x.rows();
  Vector per_row(rows);
  if (exec == Execution::serial) {
    for (Index t = 0; t < rows; ++t) {
      per_row[t] = (x.row(t) - d.row(t) * s).squaredNorm();
    }
  } else {
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < rows; ++t) {
      per_row[t] = (x.row(t) - d.row(t) * s).squaredNorm();
    }
  }
  // Fixed-order reduction keeps both paths bit-identical.
  double total = 0.0;
  for (Index t = 0; t < rows; ++t) total += per_row[t];
  return total;
}

}  // namespace iadl::kernels
