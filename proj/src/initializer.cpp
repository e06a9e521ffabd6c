#include "iadl/initializer.hpp"

#include "iadl/constraints.hpp"
#include "iadl/eval.hpp"
#include "iadl/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iadl {

namespace {

using Dense = Eigen::MatrixXd;

// (W W^T)^{-1/2} W
Dense symmetric_decorrelate(const Dense& w) {
  Eigen::SelfAdjointEigenSolver<Dense> es(w * w.transpose());
  const Vector inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

double skewness(const Vector& v) {
  const double mean = v.mean();
  const Eigen::ArrayXd c = v.array() - mean;
  return c.cube().sum();
}

double safe_corr(const Vector& a, const Vector& b) {
  const double va = (a.array() - a.mean()).square().sum();
  const double vb = (b.array() - b.mean()).square().sum();
  if (!(va > 0.0) || !(vb > 0.0)) return 0.0;
  return vector_pearson(a, b);
}

// Leading singular pair of r, returned as (u, sigma v^T).
std::pair<Vector, Vector> leading_pair(const Matrix& r) {
  Eigen::SelfAdjointEigenSolver<Dense> es(Dense(r * r.transpose()));
  const Vector u = es.eigenvectors().col(es.eigenvectors().cols() - 1);
  return {u, (u.transpose() * r).transpose()};
}

Index merge_split_components(const Matrix& x, Matrix& d, Matrix& s, double threshold) {
  const Index k = d.cols();
  // With two samples every pair of time courses correlates perfectly.
  if (d.rows() < 3) return 0;
  std::vector<bool> refilled(static_cast<std::size_t>(k), false);
  Index merged = 0;
  for (Index pass = 0; pass + 1 < k; ++pass) {
    Index bi = -1;
    Index bj = -1;
    double best = threshold;
    for (Index i = 0; i < k; ++i) {
      if (refilled[static_cast<std::size_t>(i)]) continue;
      for (Index j = i + 1; j < k; ++j) {
        if (refilled[static_cast<std::size_t>(j)]) continue;
        const double c = std::abs(safe_corr(d.col(i), d.col(j)));
        if (c > best) {
          best = c;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    const double sign = safe_corr(d.col(bi), d.col(bj)) < 0.0 ? -1.0 : 1.0;
    Vector merged_d = d.col(bi) + sign * d.col(bj);
    if (merged_d.norm() == 0.0) merged_d = d.col(bi);
    merged_d.normalize();
    const Vector merged_s = merged_d.dot(d.col(bi)) * s.row(bi).transpose() +
                            merged_d.dot(d.col(bj)) * s.row(bj).transpose();
    d.col(bi) = merged_d;
    s.row(bi) = merged_s.transpose();
    d.col(bj).setZero();
    s.row(bj).setZero();
    auto [u, sv] = leading_pair(x - d * s);
    d.col(bj) = u;
    s.row(bj) = sv.transpose();
    refilled[static_cast<std::size_t>(bj)] = true;
    ++merged;
  }
  return merged;
}

Factorization permute_free(const Dictionary& d, const CoefficientMatrix& s, const std::vector<Index>& order) {
  Matrix dv(d.values().rows(), d.atoms());
  Matrix sv(s.values().rows(), s.values().cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    dv.col(static_cast<Index>(i)) = d.values().col(order[i]);
    sv.row(static_cast<Index>(i)) = s.values().row(order[i]);
  }
  return {Dictionary(std::move(dv), d.assisted_count()), CoefficientMatrix(std::move(sv))};
}

}  // namespace

void InitConfig::validate() const {
  if (ica_max_iters < 1) throw std::domain_error("InitConfig: ica_max_iters must be positive");
  if (!(ica_tol > 0.0)) throw std::domain_error("InitConfig: ica_tol must be positive");
  if (!(merge_corr_threshold > 0.0 && merge_corr_threshold <= 1.0)) {
    throw std::domain_error("InitConfig: merge_corr_threshold must lie in (0, 1]");
  }
  if (refine_iters < 0) throw std::domain_error("InitConfig: refine_iters must be non-negative");
}

IcaResult ica_decompose(const DataMatrix& x, Index k, const InitConfig& cfg) {
  cfg.validate();
  const Index t = x.time_points();
  const Index n = x.voxels();
  if (k < 1 || k > t) throw std::domain_error("ica_decompose: K must lie in [1, T]");

  const Dense xv = x.values();
  const Vector mu = xv.rowwise().mean();
  const Dense xc = xv.colwise() - mu;
  Eigen::SelfAdjointEigenSolver<Dense> pca(xc * xc.transpose() / static_cast<double>(n));
  Dense e(t, k);
  Vector lam(k);
  for (Index i = 0; i < k; ++i) {
    e.col(i) = pca.eigenvectors().col(t - 1 - i);
    lam[i] = pca.eigenvalues()[t - 1 - i];
  }
  if (!(lam[0] > 0.0)) throw std::domain_error("ica_decompose: data has no variance");
  lam = lam.cwiseMax(1e-12 * lam[0]);
  const Dense whiten = lam.cwiseSqrt().cwiseInverse().asDiagonal() * e.transpose();  // K x T
  const Dense z = whiten * xc;                                                         // K x N

  Rng rng = make_stream(cfg.rng_seed, 0x1ca);
  std::normal_distribution<double> g(0.0, 1.0);
  Dense w(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) w(i, j) = g(rng);
  w = symmetric_decorrelate(w);

  IcaResult out{Dictionary(Matrix::Zero(t, k), 0), CoefficientMatrix(Matrix::Zero(k, n))};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < cfg.ica_max_iters; ++it) {
    const Dense y = w * z;
    const Dense gy = y.array().tanh().matrix();
    const Vector gprime = (1.0 - gy.array().square()).matrix().rowwise().mean();
    Dense w_next = gy * z.transpose() * inv_n - gprime.asDiagonal() * w;
    w_next = symmetric_decorrelate(w_next);
    const double change = (1.0 - (w_next * w.transpose()).diagonal().array().abs()).abs().maxCoeff();
    w = w_next;
    out.iterations = it + 1;
    if (change < cfg.ica_tol) {
      out.converged = true;
      break;
    }
  }

  Matrix maps = w * whiten * xv;                                 // K x N
  Matrix mixing = e * lam.cwiseSqrt().asDiagonal() * w.transpose();  // T x K
  for (Index j = 0; j < k; ++j) {
    const double norm = mixing.col(j).norm();
    if (norm > 0.0) {
      mixing.col(j) /= norm;
      maps.row(j) *= norm;
    }
    if (skewness(maps.row(j).transpose()) < 0.0) {
      mixing.col(j) *= -1.0;
      maps.row(j) *= -1.0;
    }
  }
  // Deterministic order: by map energy, largest first.
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return maps.row(a).squaredNorm() > maps.row(b).squaredNorm(); });
  Matrix d_sorted(t, k);
  Matrix s_sorted(k, n);
  for (Index i = 0; i < k; ++i) {
    d_sorted.col(i) = mixing.col(order[static_cast<std::size_t>(i)]);
    s_sorted.row(i) = maps.row(order[static_cast<std::size_t>(i)]);
  }

  out.merged = merge_split_components(x.values(), d_sorted, s_sorted, cfg.merge_corr_threshold);
  out.dictionary = Dictionary(std::move(d_sorted), 0);
  out.coefficients = CoefficientMatrix(std::move(s_sorted));
  return out;
}

Factorization align_assisted(const Matrix& d_bar, const Matrix& s_bar, const TaskTimeCourses& delta) {
  const Index k = d_bar.cols();
  const Index m = delta.count();
  if (s_bar.rows() != k) throw std::domain_error("align_assisted: D and S disagree on K");
  if (m > k) throw std::domain_error("align_assisted: more task time courses than atoms");
  if (m > 0 && delta.time_points() != d_bar.rows()) {
    throw std::domain_error("align_assisted: task time courses have the wrong length");
  }
  std::vector<bool> taken(static_cast<std::size_t>(k), false);
  std::vector<Index> matched;
  std::vector<double> corr;
  for (Index i = 0; i < m; ++i) {
    Index best_j = -1;
    double best = -1.0;
    double best_c = 0.0;
    for (Index j = 0; j < k; ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      const double c = safe_corr(delta.values().col(i), d_bar.col(j));
      if (std::abs(c) > best) {
        best = std::abs(c);
        best_j = j;
        best_c = c;
      }
    }
    taken[static_cast<std::size_t>(best_j)] = true;
    matched.push_back(best_j);
    corr.push_back(best_c);
  }
  std::vector<Index> order = matched;
  for (Index j = 0; j < k; ++j) {
    if (!taken[static_cast<std::size_t>(j)]) order.push_back(j);
  }

  Matrix d(d_bar.rows(), k);
  Matrix s(k, s_bar.cols());
  for (Index i = 0; i < k; ++i) {
    d.col(i) = d_bar.col(order[static_cast<std::size_t>(i)]);
    s.row(i) = s_bar.row(order[static_cast<std::size_t>(i)]);
  }
  for (Index i = 0; i < m; ++i) {
    const Vector di = delta.values().col(i);
    const double dn = di.norm();
    const double scale = dn > 0.0 ? d.col(i).norm() / dn : 1.0;
    const double sign = corr[static_cast<std::size_t>(i)] < 0.0 ? -1.0 : 1.0;
    s.row(i) *= sign * scale;
    d.col(i) = di;
  }
  return {Dictionary(std::move(d), m), CoefficientMatrix(std::move(s))};
}

Factorization refine_full_sparsity(const DataMatrix& x, const Dictionary& d0, const CoefficientMatrix& s0,
                                   const TaskTimeCourses& delta, const ConstraintSpec& spec,
                                   const InitConfig& cfg, const SolverConfig& solver) {
  cfg.validate();
  solver.validate();
  spec.bind(x.voxels());
  if (delta.count() != d0.assisted_count()) {
    throw std::domain_error("refine_full_sparsity: assisted atom count differs from task time course count");
  }
  if (spec.sources() != d0.atoms()) throw std::domain_error("refine_full_sparsity: one budget per source required");
  const Matrix& xv = x.values();
  const double phi_total = spec.phi().sum();
  Matrix d = d0.values();
  Matrix s = s0.values();
  for (int it = 0; it < cfg.refine_iters; ++it) {
    const double c_s = majorization_constant(d.transpose() * d, solver);
    Matrix a = coefficient_gradient_step(xv, d, s, c_s);
    const Matrix w = kernels::weights(a, spec.epsilon(), solver.execution);
    if (weighted_l1_matrix_norm(a, w) > phi_total) a = project_weighted_l1_matrix_ball(a, w, phi_total);
    s = std::move(a);
    d = dictionary_step(xv, s, d, delta.values(), spec, solver).dictionary;
  }
  return {Dictionary(std::move(d), d0.assisted_count()), CoefficientMatrix(std::move(s))};
}

Factorization order_by_sparsity(const Dictionary& d, const CoefficientMatrix& s) {
  const Index k = d.atoms();
  const Index m = d.assisted_count();
  if (s.sources() != k) throw std::domain_error("order_by_sparsity: D and S disagree on K");
  std::vector<double> theta(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) theta[static_cast<std::size_t>(i)] = thresholded_sparsity_percentage(s.values().row(i).transpose());
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin() + m, order.end(), [&](Index a, Index b) {
    return theta[static_cast<std::size_t>(a)] > theta[static_cast<std::size_t>(b)];
  });
  return permute_free(d, s, order);
}

InitResult initialize_from(const DataMatrix& x, const Dictionary& d0, const CoefficientMatrix& s0,
                           const TaskTimeCourses& delta, const ConstraintSpec& spec, const InitConfig& cfg,
                           const SolverConfig& solver) {
  const Factorization refined = refine_full_sparsity(x, d0, s0, delta, spec, cfg, solver);
  return {order_by_sparsity(refined.dictionary, refined.coefficients), true, 0};
}

InitResult initialize(const DataMatrix& x, Index k, const TaskTimeCourses& delta, const ConstraintSpec& spec,
                      const InitConfig& cfg, const SolverConfig& solver) {
  const IcaResult ica = ica_decompose(x, k, cfg);
  const Factorization aligned = align_assisted(ica.dictionary.values(), ica.coefficients.values(), delta);
  InitResult out = initialize_from(x, aligned.dictionary, aligned.coefficients, delta, spec, cfg, solver);
  out.ica_converged = ica.converged;
  out.merged = ica.merged;
  return out;
}

}  // namespace iadl
