#pragma once

#include "iadl/solver.hpp"
#include "iadl/types.hpp"

#include <cstdint>

namespace iadl {

struct InitConfig {
  int ica_max_iters = 400;
  double ica_tol = 1e-7;
  double merge_corr_threshold = 0.95;
  int refine_iters = 10;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct IcaResult {
  Dictionary dictionary;  // unit-norm columns, assisted_count = 0
  CoefficientMatrix coefficients;
  bool converged = false;
  int iterations = 0;
  Index merged = 0;  // number of merged pairs
};

/*
 * Spatial ICA: the rows of X are centred over voxels and whitened onto the
 * leading K principal components, then a symmetric fixed-point iteration
 * with the tanh nonlinearity estimates the unmixing matrix. Maps are the
 * unmixed uncentred data, each flipped to positive skew; time courses are
 * the matching mixing columns scaled to unit norm.
 *
 * Pairs of time courses with |corr| above the merge threshold are summed
 * (sign-aligned, renormalised) and the freed slot is refilled with the
 * leading singular pair of the residual.
 */
IcaResult ica_decompose(const DataMatrix& x, Index k, const InitConfig& cfg);

struct Factorization {
  Dictionary dictionary;
  CoefficientMatrix coefficients;
};

/*
 * Greedily pairs each task time course, in order, with the remaining
 * column of maximal |Pearson correlation|, moves matched columns to the
 * front (the rest keep their relative order) and replaces them by Delta.
 * Each matched map is scaled by sign(corr) ||d_j|| / ||delta_i||.
 */
Factorization align_assisted(const Matrix& d_bar, const Matrix& s_bar, const TaskTimeCourses& delta);

/// Solver iterations with the row-wise balls replaced by a single weighted
/// l1 ball of radius sum(phi) on the whole coefficient matrix.
Factorization refine_full_sparsity(const DataMatrix& x, const Dictionary& d, const CoefficientMatrix& s,
                                   const TaskTimeCourses& delta, const ConstraintSpec& spec,
                                   const InitConfig& cfg, const SolverConfig& solver = {});

/// Stable reordering of atoms M+1..K so that row sparsity is non-increasing.
Factorization order_by_sparsity(const Dictionary& d, const CoefficientMatrix& s);

struct InitResult {
  Factorization start;
  bool ica_converged = true;
  Index merged = 0;
};

/// The four-step initialisation.
InitResult initialize(const DataMatrix& x, Index k, const TaskTimeCourses& delta, const ConstraintSpec& spec,
                      const InitConfig& cfg, const SolverConfig& solver = {});

/// Steps three and four only, from an externally supplied pair.
InitResult initialize_from(const DataMatrix& x, const Dictionary& d0, const CoefficientMatrix& s0,
                           const TaskTimeCourses& delta, const ConstraintSpec& spec, const InitConfig& cfg,
                           const SolverConfig& solver = {});

}  // namespace iadl
