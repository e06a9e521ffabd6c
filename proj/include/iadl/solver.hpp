#pragma once

#include "iadl/kernels.hpp"
#include "iadl/types.hpp"

#include <stdexcept>
#include <vector>

namespace iadl {

struct SolverConfig {
  int max_iters = 200;
  double rel_obj_tol = 1e-8;
  double spectral_safety = 1.01;
  double power_iter_tol = 1e-10;
  int power_iter_max = 1000;
  Execution execution = Execution::parallel;
  // When a full reweighted iteration would raise the loss, redo it with the
  // previous weights on rows whose anchor left the new ball.
  bool monotone_safeguard = true;

  void validate() const;
};

enum class StopReason { max_iters, tolerance };

struct SolveTrace {
  std::vector<double> objective;                  // ||X - DS||_F^2 after each iteration
  std::vector<double> constraint_violation_max;   // worst feasibility gap after each iteration
  int iterations_run = 0;
  int safeguarded_iterations = 0;
  StopReason stop_reason = StopReason::max_iters;

  /// True when every objective value is <= its predecessor * (1 + rel_slack).
  bool monotone(double rel_slack = 1e-9) const;
};

struct SolveResult {
  Dictionary dictionary;
  CoefficientMatrix coefficients;
  SolveTrace trace;
};

/// Raised by spectral_norm when power iteration does not settle.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

private:
  double last_estimate_;
};

/*
 * Largest eigenvalue of a symmetric PSD matrix by power iteration.
 * Stops once the eigen-residual ||M v - lambda v|| falls below tol * lambda.
 */
double spectral_norm(const Matrix& sym, double tol = 1e-10, int max_iter = 1000);

/// Majorisation constant: safety * lambda_max(sym), floored at 1e-12.
/// Falls back to a dense eigensolver if power iteration does not settle.
double majorization_constant(const Matrix& sym, const SolverConfig& cfg);

/// ||X - D S||_F^2
double objective(const Matrix& x, const Matrix& d, const Matrix& s);

/// psi_S(S, S_t) = ||X - DS||^2 - ||D(S - S_t)||^2 + c ||S - S_t||^2
double coefficient_surrogate(const Matrix& x, const Matrix& d, const Matrix& s,
                             const Matrix& s_anchor, double c);

/// psi_D(D, D_t) = ||X - DS||^2 - ||(D - D_t) S||^2 + c ||D - D_t||^2
double dictionary_surrogate(const Matrix& x, const Matrix& s, const Matrix& d,
                            const Matrix& d_anchor, double c);

/// Intermediate matrix A = (1/c)[D^T X + (c I - D^T D) S_t].
Matrix coefficient_gradient_step(const Matrix& x, const Matrix& d, const Matrix& s_anchor, double c);

/// Intermediate matrix B = (1/c)[X S^T + D_t (c I - S S^T)].
Matrix dictionary_gradient_step(const Matrix& x, const Matrix& s, const Matrix& d_anchor, double c);

struct CoefficientStep {
  Matrix coefficients;
  Matrix weights;  // weights each row was projected with
  double c_s = 0.0;
  double max_violation = 0.0;
  int fallback_rows = 0;
};

struct DictionaryStep {
  Matrix dictionary;
  double c_d = 0.0;
  double max_violation = 0.0;
};

/// Sparse coding block: one majorised step with row-wise weighted l1 balls.
CoefficientStep coefficient_step(const Matrix& x, const Matrix& d, const Matrix& s_anchor,
                                 const ConstraintSpec& spec, const SolverConfig& cfg);

/// As above, but rows whose anchor violates the ball under W(A) are
/// projected with the matching row of `previous_weights` instead.
CoefficientStep coefficient_step(const Matrix& x, const Matrix& d, const Matrix& s_anchor,
                                 const ConstraintSpec& spec, const SolverConfig& cfg,
                                 const Matrix& previous_weights);

/// Dictionary block: one majorised step followed by the per-atom projections.
DictionaryStep dictionary_step(const Matrix& x, const Matrix& s, const Matrix& d_anchor,
                               const Matrix& delta, const ConstraintSpec& spec,
                               const SolverConfig& cfg);

CoefficientMatrix coefficient_update(const DataMatrix& x, const Dictionary& d,
                                     const CoefficientMatrix& s_t, const ConstraintSpec& spec,
                                     const SolverConfig& cfg);

Dictionary dictionary_update(const DataMatrix& x, const CoefficientMatrix& s, const Dictionary& d_t,
                             const TaskTimeCourses& delta, const ConstraintSpec& spec,
                             const SolverConfig& cfg);

/// Diagnostic multiplier gamma_i = max{0, 2c/||w||^2 (||a||_{1,w} - phi)}.
double lagrange_row_multiplier(const Vector& a_row, const Vector& w_row, double phi, double c_s);

/// Alternating majorised minimisation with assisted atoms.
SolveResult run_iadl(const DataMatrix& x, const Dictionary& d0, const CoefficientMatrix& s0,
                     const TaskTimeCourses& delta, const ConstraintSpec& spec,
                     const SolverConfig& cfg = {});

}  // namespace iadl
