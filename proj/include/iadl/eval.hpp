#pragma once

#include "iadl/types.hpp"

#include <vector>

namespace iadl {

/// Sample Pearson correlation of the vectorised entries. Throws
/// std::domain_error when either argument is constant or shapes differ.
double matrix_pearson(const Matrix& a, const Matrix& b);

/// Pearson correlation of two vectors (same rules as matrix_pearson).
double vector_pearson(const Vector& a, const Vector& b);

/// F = d s^T.
Matrix full_source(const Vector& d, const Vector& s);

/// rho(d1 s1^T, d2 s2^T) from inner products, without forming either matrix.
/// Returns 0 when either outer product is constant.
double full_source_correlation(const Vector& d1, const Vector& s1, const Vector& d2, const Vector& s2);

enum class MatchMode { full_source, time_course };

struct MatchSummary {
  double assisted = 0.0;
  double brain_like = 0.0;
  double all = 0.0;
};

struct MatchReport {
  std::vector<Index> mapping;  // estimated index per true source, -1 when unmatched
  Vector r_full;               // per true source
  Vector r_time;               // per true source
  MatchSummary full;
  MatchSummary time;
};

/// Squared-correlation table c_ij between true source i and estimate j.
Matrix correlation_table(const SourceSet& truth, const Matrix& d, const Matrix& s, MatchMode mode);

/*
 * Assisted sources first: true source p[i] is paired with estimate i.
 * The rest is matched greedily on the largest remaining c_ij (ties to the
 * lowest true index, then the lowest estimate index) until min(K~, K)
 * true sources are covered. `mode` decides the table used for matching;
 * both scores are reported for the resulting pairs.
 */
MatchReport match_and_score(const SourceSet& truth, const Matrix& d, const Matrix& s,
                            const std::vector<Index>& assisted_map, MatchMode mode);

/// theta_FBN = 100 (1 - n) + sum theta_i.
double atlas_fbn_sparsity(const std::vector<double>& region_thetas);

}  // namespace iadl
