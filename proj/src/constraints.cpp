#include "iadl/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace iadl {

namespace {

void require_same_length(Index a, Index b, const char* what) {
  if (a != b) {
    throw std::domain_error(std::string(what) + ": length mismatch");
  }
}

void require_positive_weights(const VectorRef& w) {
  for (Index i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
      throw std::domain_error("weighted l1 projection: weights must be positive and finite");
    }
  }
}

// g(gamma) = sum_i w_i max(|v_i| - gamma w_i, 0), non-increasing in gamma.
double shrunk_norm(const VectorRef& v, const VectorRef& w, double gamma) {
  double total = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double r = std::abs(v[i]) - gamma * w[i];
    if (r > 0.0) total += w[i] * r;
  }
  return total;
}

double threshold_by_bisection(const VectorRef& v, const VectorRef& w, double phi) {
  double lo = 0.0;
  double hi = 0.0;
  for (Index i = 0; i < v.size(); ++i) hi = std::max(hi, std::abs(v[i]) / w[i]);
  for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (shrunk_norm(v, w, mid) > phi) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double threshold_by_breakpoints(const VectorRef& v, const VectorRef& w, double phi) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) order.push_back(i);
  }
  auto breakpoint = [&](Index i) { return std::abs(v[i]) / w[i]; };
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double ba = breakpoint(a);
    const double bb = breakpoint(b);
    return ba > bb || (ba == bb && a < b);
  });

  double weighted_sum = 0.0;  // sum of w_i |v_i| over the active set
  double weight_sq = 0.0;     // sum of w_i^2 over the active set
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Index i = order[k];
    weighted_sum += w[i] * std::abs(v[i]);
    weight_sq += w[i] * w[i];
    const double gamma = (weighted_sum - phi) / weight_sq;
    const double next = k + 1 < order.size() ? breakpoint(order[k + 1]) : 0.0;
    if (gamma >= next) return gamma;
  }
  // Unreachable when the input violates the constraint.
  return threshold_by_bisection(v, w, phi);
}

}  // namespace

Vector compute_weights(const VectorRef& x, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::domain_error("compute_weights: epsilon must be positive");
  }
  return (x.array().abs() + epsilon).inverse().matrix();
}

Matrix compute_weight_matrix(const Matrix& a, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::domain_error("compute_weights: epsilon must be positive");
  }
  return (a.array().abs() + epsilon).inverse().matrix();
}

double weighted_l1_norm(const VectorRef& x, const VectorRef& w) {
  require_same_length(x.size(), w.size(), "weighted_l1_norm");
  return (w.array() * x.array().abs()).sum();
}

double weighted_l1_matrix_norm(const Matrix& s, const Matrix& w) {
  if (s.rows() != w.rows() || s.cols() != w.cols()) {
    throw std::domain_error("weighted_l1_matrix_norm: shape mismatch");
  }
  return (w.array() * s.array().abs()).sum();
}

double weighted_l1_threshold(const VectorRef& v, const VectorRef& w, double phi) {
  require_same_length(v.size(), w.size(), "project_weighted_l1_ball");
  if (!(phi >= 0.0)) {
    throw std::domain_error("project_weighted_l1_ball: radius must be non-negative");
  }
  require_positive_weights(w);
  if (weighted_l1_norm(v, w) <= phi) return 0.0;

  if (phi == 0.0) {
    double gamma = 0.0;
    for (Index i = 0; i < v.size(); ++i) gamma = std::max(gamma, std::abs(v[i]) / w[i]);
    return gamma;
  }
  const double ratio = w.maxCoeff() / w.minCoeff();
  if (ratio > 1e12) return threshold_by_bisection(v, w, phi);
  return threshold_by_breakpoints(v, w, phi);
}

Vector project_weighted_l1_ball(const VectorRef& v, const VectorRef& w, double phi) {
  const double gamma = weighted_l1_threshold(v, w, phi);
  if (gamma == 0.0) return v;
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double r = std::abs(v[i]) - gamma * w[i];
    out[i] = r > 0.0 ? std::copysign(r, v[i]) : 0.0;
  }
  return out;
}

Matrix project_weighted_l1_matrix_ball(const Matrix& s, const Matrix& w, double phi_total) {
  if (s.rows() != w.rows() || s.cols() != w.cols()) {
    throw std::domain_error("project_weighted_l1_matrix_ball: shape mismatch");
  }
  const Eigen::Map<const Vector> flat_s(s.data(), s.size());
  const Eigen::Map<const Vector> flat_w(w.data(), w.size());
  const Vector projected = project_weighted_l1_ball(flat_s, flat_w, phi_total);
  Matrix out(s.rows(), s.cols());
  Eigen::Map<Vector>(out.data(), out.size()) = projected;
  return out;
}

Vector project_similarity_ball(const VectorRef& b, const VectorRef& delta, double c_delta) {
  require_same_length(b.size(), delta.size(), "project_similarity_ball");
  if (!(c_delta >= 0.0)) {
    throw std::domain_error("project_similarity_ball: radius must be non-negative");
  }
  const Vector diff = b - delta;
  const double dist_sq = diff.squaredNorm();
  if (dist_sq <= c_delta) return b;
  return delta + (std::sqrt(c_delta) / std::sqrt(dist_sq)) * diff;
}

Vector project_l2_ball(const VectorRef& b, double c_d) {
  if (!(c_d > 0.0)) {
    throw std::domain_error("project_l2_ball: radius must be positive");
  }
  const double norm_sq = b.squaredNorm();
  if (norm_sq <= c_d) return b;
  return (std::sqrt(c_d) / std::sqrt(norm_sq)) * b;
}

}  // namespace iadl
