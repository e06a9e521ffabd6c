#include "iadl/solver.hpp"

#include "iadl/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace iadl {

namespace {

constexpr double kScaleFloor = 1e-12;

Vector power_start(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
  }
  return v.normalized();
}

void check_shapes(const Matrix& x, const Matrix& d, const Matrix& s) {
  if (d.rows() != x.rows() || s.cols() != x.cols() || d.cols() != s.rows()) {
    throw std::domain_error("solver: inconsistent shapes for X, D and S");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 1) throw std::domain_error("SolverConfig: max_iters must be positive");
  if (!(rel_obj_tol >= 0.0)) throw std::domain_error("SolverConfig: rel_obj_tol must be >= 0");
  if (!(spectral_safety >= 1.0)) throw std::domain_error("SolverConfig: spectral_safety must be >= 1");
  if (!(power_iter_tol > 0.0)) throw std::domain_error("SolverConfig: power_iter_tol must be > 0");
  if (power_iter_max < 1) throw std::domain_error("SolverConfig: power_iter_max must be positive");
}

bool SolveTrace::monotone(double rel_slack) const {
  for (std::size_t t = 1; t < objective.size(); ++t) {
    if (objective[t] > objective[t - 1] * (1.0 + rel_slack)) return false;
  }
  return true;
}

double spectral_norm(const Matrix& sym, double tol, int max_iter) {
  if (sym.rows() != sym.cols()) {
    throw std::domain_error("spectral_norm: matrix must be square");
  }
  const Index n = sym.rows();
  if (n == 0) return 0.0;
  Vector v = power_start(n);
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector y = sym * v;
    lambda = v.dot(y);
    const double residual = (y - lambda * v).norm();
    const double norm_y = y.norm();
    if (norm_y == 0.0) return 0.0;
    if (residual <= tol * std::abs(lambda)) return lambda;
    v = y / norm_y;
  }
  throw ConvergenceError("spectral_norm: power iteration did not converge", lambda);
}

double majorization_constant(const Matrix& sym, const SolverConfig& cfg) {
  double lambda = 0.0;
  try {
    lambda = spectral_norm(sym, cfg.power_iter_tol, cfg.power_iter_max);
  } catch (const ConvergenceError&) {
    // Clustered leading eigenvalues; K is small so a dense solve is cheap.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    lambda = eig.eigenvalues().maxCoeff();
  }
  return std::max(cfg.spectral_safety * lambda, kScaleFloor);
}

double objective(const Matrix& x, const Matrix& d, const Matrix& s) {
  return (x - d * s).squaredNorm();
}

double coefficient_surrogate(const Matrix& x, const Matrix& d, const Matrix& s,
                             const Matrix& s_anchor, double c) {
  const Matrix step = s - s_anchor;
  return objective(x, d, s) - (d * step).squaredNorm() + c * step.squaredNorm();
}

double dictionary_surrogate(const Matrix& x, const Matrix& s, const Matrix& d,
                            const Matrix& d_anchor, double c) {
  const Matrix step = d - d_anchor;
  return objective(x, d, s) - (step * s).squaredNorm() + c * step.squaredNorm();
}

Matrix coefficient_gradient_step(const Matrix& x, const Matrix& d, const Matrix& s_anchor, double c) {
  const Index k = d.cols();
  const Matrix gram = d.transpose() * d;
  const Matrix shifted = c * Matrix::Identity(k, k) - gram;
  return (d.transpose() * x + shifted * s_anchor) / c;
}

Matrix dictionary_gradient_step(const Matrix& x, const Matrix& s, const Matrix& d_anchor, double c) {
  const Index k = s.rows();
  const Matrix gram = s * s.transpose();
  const Matrix shifted = c * Matrix::Identity(k, k) - gram;
  return (x * s.transpose() + d_anchor * shifted) / c;
}

namespace {

CoefficientStep coefficient_step_impl(const Matrix& x, const Matrix& d, const Matrix& s_anchor,
                                      const ConstraintSpec& spec, const SolverConfig& cfg,
                                      const Matrix* previous_weights) {
  check_shapes(x, d, s_anchor);
  if (spec.sources() != d.cols()) {
    throw std::domain_error("coefficient_update: one sparsity budget per source required");
  }
  CoefficientStep out;
  out.c_s = majorization_constant(d.transpose() * d, cfg);
  out.coefficients = coefficient_gradient_step(x, d, s_anchor, out.c_s);
  out.weights = kernels::weights(out.coefficients, spec.epsilon(), cfg.execution);
  if (previous_weights != nullptr) {
    if (previous_weights->rows() != out.weights.rows() ||
        previous_weights->cols() != out.weights.cols()) {
      throw std::domain_error("coefficient_step: previous weights have the wrong shape");
    }
    const Vector anchor_norms = kernels::row_weighted_norms(s_anchor, out.weights, cfg.execution);
    for (Index i = 0; i < anchor_norms.size(); ++i) {
      if (anchor_norms[i] > spec.phi()[i]) {
        out.weights.row(i) = previous_weights->row(i);
        ++out.fallback_rows;
      }
    }
  }
  const Vector violation =
      kernels::project_rows(out.coefficients, out.weights, spec.phi(), cfg.execution);
  out.max_violation = violation.size() ? violation.maxCoeff() : 0.0;
  return out;
}

}  // namespace

CoefficientStep coefficient_step(const Matrix& x, const Matrix& d, const Matrix& s_anchor,
                                 const ConstraintSpec& spec, const SolverConfig& cfg) {
  return coefficient_step_impl(x, d, s_anchor, spec, cfg, nullptr);
}

CoefficientStep coefficient_step(const Matrix& x, const Matrix& d, const Matrix& s_anchor,
                                 const ConstraintSpec& spec, const SolverConfig& cfg,
                                 const Matrix& previous_weights) {
  return coefficient_step_impl(x, d, s_anchor, spec, cfg, &previous_weights);
}

DictionaryStep dictionary_step(const Matrix& x, const Matrix& s, const Matrix& d_anchor,
                               const Matrix& delta, const ConstraintSpec& spec,
                               const SolverConfig& cfg) {
  check_shapes(x, d_anchor, s);
  DictionaryStep out;
  out.c_d = majorization_constant(s * s.transpose(), cfg);
  out.dictionary = dictionary_gradient_step(x, s, d_anchor, out.c_d);
  const Vector violation =
      kernels::project_columns(out.dictionary, delta, spec.c_delta(), spec.c_d(), cfg.execution);
  out.max_violation = violation.size() ? violation.maxCoeff() : 0.0;
  return out;
}

CoefficientMatrix coefficient_update(const DataMatrix& x, const Dictionary& d,
                                     const CoefficientMatrix& s_t, const ConstraintSpec& spec,
                                     const SolverConfig& cfg) {
  cfg.validate();
  spec.bind(x.voxels());
  return CoefficientMatrix(
      coefficient_step(x.values(), d.values(), s_t.values(), spec, cfg).coefficients);
}

Dictionary dictionary_update(const DataMatrix& x, const CoefficientMatrix& s, const Dictionary& d_t,
                             const TaskTimeCourses& delta, const ConstraintSpec& spec,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (delta.count() != d_t.assisted_count()) {
    throw std::domain_error("dictionary_update: task time course count differs from assisted atoms");
  }
  if (delta.count() > 0 && delta.time_points() != x.time_points()) {
    throw std::domain_error("dictionary_update: task time courses have the wrong length");
  }
  return Dictionary(
      dictionary_step(x.values(), s.values(), d_t.values(), delta.values(), spec, cfg).dictionary,
      d_t.assisted_count());
}

double lagrange_row_multiplier(const Vector& a_row, const Vector& w_row, double phi, double c_s) {
  const double excess = weighted_l1_norm(a_row, w_row) - phi;
  return std::max(0.0, 2.0 * c_s / w_row.squaredNorm() * excess);
}

SolveResult run_iadl(const DataMatrix& x, const Dictionary& d0, const CoefficientMatrix& s0,
                     const TaskTimeCourses& delta, const ConstraintSpec& spec,
                     const SolverConfig& cfg) {
  cfg.validate();
  check_shapes(x.values(), d0.values(), s0.values());
  if (d0.assisted_count() != delta.count()) {
    throw std::domain_error("run_iadl: assisted atom count differs from task time course count");
  }
  if (delta.count() > 0 && delta.time_points() != x.time_points()) {
    throw std::domain_error("run_iadl: task time courses have the wrong length");
  }
  if (spec.sources() != d0.atoms()) {
    throw std::domain_error("run_iadl: one sparsity budget per source required");
  }
  spec.bind(x.voxels());

  const Matrix& xv = x.values();
  Matrix d = d0.values();
  Matrix s = s0.values();
  SolveTrace trace;
  trace.objective.reserve(static_cast<std::size_t>(cfg.max_iters));

  Matrix used_weights;
  for (int it = 0; it < cfg.max_iters; ++it) {
    CoefficientStep cs = coefficient_step(xv, d, s, spec, cfg);
    DictionaryStep ds = dictionary_step(xv, cs.coefficients, d, delta.values(), spec, cfg);
    double f = kernels::residual_sq(xv, ds.dictionary, cs.coefficients, cfg.execution);

    if (cfg.monotone_safeguard && !trace.objective.empty() && f > trace.objective.back()) {
      cs = coefficient_step(xv, d, s, spec, cfg, used_weights);
      ds = dictionary_step(xv, cs.coefficients, d, delta.values(), spec, cfg);
      f = kernels::residual_sq(xv, ds.dictionary, cs.coefficients, cfg.execution);
      ++trace.safeguarded_iterations;
    }

    s = std::move(cs.coefficients);
    d = std::move(ds.dictionary);
    used_weights = std::move(cs.weights);
    trace.objective.push_back(f);
    trace.constraint_violation_max.push_back(std::max(cs.max_violation, ds.max_violation));
    trace.iterations_run = it + 1;

    if (trace.objective.size() >= 2) {
      const double prev = trace.objective[trace.objective.size() - 2];
      if (std::abs(prev - f) / std::max(prev, 1e-30) < cfg.rel_obj_tol) {
        trace.stop_reason = StopReason::tolerance;
        break;
      }
    }
  }

  return SolveResult{Dictionary(std::move(d), d0.assisted_count()), CoefficientMatrix(std::move(s)),
                     std::move(trace)};
}

}  // namespace iadl
