#include "iadl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iadl {

namespace {

double pearson_flat(const double* a, const double* b, Index n) {
  if (n < 2) throw std::domain_error("pearson: need at least two entries");
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (Index i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw std::domain_error("pearson: correlation undefined for a constant argument");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double safe_vector_rho_sq(const Vector& a, const Vector& b) {
  const double va = (a.array() - a.mean()).square().sum();
  const double vb = (b.array() - b.mean()).square().sum();
  if (!(va > 0.0) || !(vb > 0.0)) return 0.0;
  const double r = vector_pearson(a, b);
  return r * r;
}

}  // namespace

double matrix_pearson(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::domain_error("matrix_pearson: shape mismatch");
  }
  return pearson_flat(a.data(), b.data(), a.size());
}

double vector_pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::domain_error("vector_pearson: length mismatch");
  return pearson_flat(a.data(), b.data(), a.size());
}

Matrix full_source(const Vector& d, const Vector& s) { return d * s.transpose(); }

double full_source_correlation(const Vector& d1, const Vector& s1, const Vector& d2, const Vector& s2) {
  if (d1.size() != d2.size() || s1.size() != s2.size()) {
    throw std::domain_error("full_source_correlation: shape mismatch");
  }
  const double n = static_cast<double>(d1.size()) * static_cast<double>(s1.size());
  const double sum1 = d1.sum() * s1.sum();
  const double sum2 = d2.sum() * s2.sum();
  const double cov = d1.dot(d2) * s1.dot(s2) - sum1 * sum2 / n;
  const double var1 = d1.squaredNorm() * s1.squaredNorm() - sum1 * sum1 / n;
  const double var2 = d2.squaredNorm() * s2.squaredNorm() - sum2 * sum2 / n;
  if (!(var1 > 0.0) || !(var2 > 0.0)) return 0.0;
  return std::clamp(cov / std::sqrt(var1 * var2), -1.0, 1.0);
}

Matrix correlation_table(const SourceSet& truth, const Matrix& d, const Matrix& s, MatchMode mode) {
  truth.validate();
  if (d.cols() != s.rows() || d.rows() != truth.time_courses.rows() || s.cols() != truth.maps.cols()) {
    throw std::domain_error("correlation_table: estimate shapes do not match the truth");
  }
  const Index kt = truth.count();
  const Index ke = d.cols();
  Matrix c(kt, ke);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < kt; ++i) {
    const Vector dt = truth.time_courses.col(i);
    const Vector st = truth.maps.row(i).transpose();
    for (Index j = 0; j < ke; ++j) {
      const Vector de = d.col(j);
      if (mode == MatchMode::time_course) {
        c(i, j) = safe_vector_rho_sq(dt, de);
      } else {
        const double r = full_source_correlation(dt, st, de, s.row(j).transpose());
        c(i, j) = r * r;
      }
    }
  }
  return c;
}

MatchReport match_and_score(const SourceSet& truth, const Matrix& d, const Matrix& s,
                            const std::vector<Index>& assisted_map, MatchMode mode) {
  const Index kt = truth.count();
  const Index ke = d.cols();
  const auto m = static_cast<Index>(assisted_map.size());
  if (m > ke) throw std::domain_error("match_and_score: more assisted sources than estimates");
  std::vector<bool> row_used(static_cast<std::size_t>(kt), false);
  std::vector<bool> col_used(static_cast<std::size_t>(ke), false);
  for (Index i = 0; i < m; ++i) {
    const Index p = assisted_map[static_cast<std::size_t>(i)];
    if (p < 0 || p >= kt) throw std::domain_error("match_and_score: assisted index out of range");
    if (row_used[static_cast<std::size_t>(p)]) throw std::domain_error("match_and_score: repeated assisted index");
    row_used[static_cast<std::size_t>(p)] = true;
    col_used[static_cast<std::size_t>(i)] = true;
  }

  const Matrix c_full = correlation_table(truth, d, s, MatchMode::full_source);
  const Matrix c_time = correlation_table(truth, d, s, MatchMode::time_course);
  const Matrix& c = mode == MatchMode::full_source ? c_full : c_time;

  MatchReport rep;
  rep.mapping.assign(static_cast<std::size_t>(kt), -1);
  for (Index i = 0; i < m; ++i) rep.mapping[static_cast<std::size_t>(assisted_map[static_cast<std::size_t>(i)])] = i;

  const Index target = std::min(kt, ke);
  for (Index covered = m; covered < target; ++covered) {
    Index best_i = -1;
    Index best_j = -1;
    double best = -1.0;
    for (Index i = 0; i < kt; ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < ke; ++j) {
        if (col_used[static_cast<std::size_t>(j)]) continue;
        if (c(i, j) > best) {
          best = c(i, j);
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_i < 0) break;
    row_used[static_cast<std::size_t>(best_i)] = true;
    col_used[static_cast<std::size_t>(best_j)] = true;
    rep.mapping[static_cast<std::size_t>(best_i)] = best_j;
  }

  rep.r_full = Vector::Zero(kt);
  rep.r_time = Vector::Zero(kt);
  for (Index i = 0; i < kt; ++i) {
    const Index j = rep.mapping[static_cast<std::size_t>(i)];
    if (j < 0) continue;
    rep.r_full[i] = c_full(i, j);
    rep.r_time[i] = c_time(i, j);
  }

  auto summarise = [&](const Vector& r) {
    MatchSummary out;
    double brain = 0.0;
    Index brain_n = 0;
    for (Index i = 0; i < kt; ++i) {
      if (truth.brain_like[static_cast<std::size_t>(i)]) {
        brain += r[i];
        ++brain_n;
      }
    }
    double assisted = 0.0;
    for (Index p : assisted_map) assisted += r[p];
    out.assisted = m > 0 ? assisted / static_cast<double>(m) : 0.0;
    out.brain_like = brain_n > 0 ? brain / static_cast<double>(brain_n) : 0.0;
    out.all = kt > 0 ? r.mean() : 0.0;
    return out;
  };
  rep.full = summarise(rep.r_full);
  rep.time = summarise(rep.r_time);
  return rep;
}

double atlas_fbn_sparsity(const std::vector<double>& region_thetas) {
  if (region_thetas.empty()) throw std::domain_error("atlas_fbn_sparsity: no regions given");
  double total = 0.0;
  for (double t : region_thetas) {
    if (!(t >= 0.0 && t <= 100.0)) throw std::domain_error("atlas_fbn_sparsity: region sparsity outside [0, 100]");
    total += t;
  }
  const double theta = 100.0 * (1.0 - static_cast<double>(region_thetas.size())) + total;
  if (theta < 0.0) {
    throw std::domain_error("atlas_fbn_sparsity: regions cover more than the whole volume (overlapping regions?)");
  }
  return theta;
}

}  // namespace iadl
