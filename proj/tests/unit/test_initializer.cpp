#include "doctest.h"
#include "unit/helpers.hpp"

#include "iadl/initializer.hpp"
#include "iadl/synthgen.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace iadl;
using namespace iadl::testing;

namespace {

double abs_corr(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return std::abs(ac.dot(bc) / (ac.norm() * bc.norm()));
}

Matrix laplace_maps(Index k, Index n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution coin(0.5);
  Matrix s(k, n);
  for (Index i = 0; i < s.size(); ++i) s.data()[i] = (coin(rng) ? 1.0 : -1.0) * e(rng);
  return s;
}

// Best |corr| of each row of `truth` against any row of `est`.
Vector best_row_match(const Matrix& truth, const Matrix& est) {
  Vector best = Vector::Zero(truth.rows());
  for (Index i = 0; i < truth.rows(); ++i) {
    for (Index j = 0; j < est.rows(); ++j) {
      best[i] = std::max(best[i], abs_corr(truth.row(i).transpose(), est.row(j).transpose()));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("InitConfig validation") {
  InitConfig c;
  CHECK_NOTHROW(c.validate());
  c.merge_corr_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
  c = {};
  c.merge_corr_threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
  c = {};
  c.ica_max_iters = 0;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
  c = {};
  c.refine_iters = -1;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
}

TEST_CASE("ica_decompose separates two independent maps") {
  Rng rng = make_stream(1, 0);
  const Matrix s = laplace_maps(2, 5000, rng);
  Matrix mixed(2, 2);
  mixed << 1.0, 0.4, 0.3, 1.0;
  for (const Matrix& a : {Matrix(Matrix::Identity(2, 2)), mixed}) {
    const Matrix x = a * s;
    const IcaResult r = ica_decompose(DataMatrix(x), 2, InitConfig{});
    CHECK(r.converged);
    CHECK(r.merged == 0);
    CHECK(r.dictionary.atoms() == 2);
    CHECK(r.coefficients.sources() == 2);
    const Vector match = best_row_match(s, r.coefficients.values());
    CHECK(match.minCoeff() >= 0.99);
    for (Index j = 0; j < 2; ++j) CHECK(r.dictionary.values().col(j).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("ica_decompose recovers mixed sources in a taller problem") {
  Rng rng = make_stream(2, 0);
  const Matrix s = laplace_maps(4, 4000, rng);
  const Matrix a = random_matrix(20, 4, rng);
  const IcaResult r = ica_decompose(DataMatrix(Matrix(a * s)), 4, InitConfig{});
  CHECK(best_row_match(s, r.coefficients.values()).minCoeff() >= 0.99);
  CHECK(best_row_match(a.transpose(), r.dictionary.values().transpose()).minCoeff() >= 0.99);
  // (D, S) reproduces the data up to the removed row means.
  const Matrix recon = r.dictionary.values() * r.coefficients.values();
  CHECK(abs_corr(Eigen::Map<const Vector>(recon.data(), recon.size()),
                 Eigen::Map<const Vector>(Matrix(a * s).data(), a.rows() * s.cols())) > 0.99);
}

TEST_CASE("ica_decompose with K = 1 returns the leading principal direction") {
  Rng rng = make_stream(3, 0);
  const Matrix x = random_matrix(8, 300, rng) + random_vector(8, rng, 3.0) * random_vector(300, rng).transpose();
  const IcaResult r = ica_decompose(DataMatrix(x), 1, InitConfig{});
  Matrix xc = x;
  for (Index t = 0; t < xc.rows(); ++t) xc.row(t).array() -= xc.row(t).mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(xc * xc.transpose()));
  const Vector lead = es.eigenvectors().col(7);
  CHECK(std::abs(lead.dot(r.dictionary.values().col(0))) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("ica_decompose merges a split source") {
  Rng rng = make_stream(4, 0);
  const Index t = 30, n = 4000;
  const Matrix s = laplace_maps(3, n, rng);
  Matrix a = random_matrix(t, 3, rng);
  a.col(2) = a.col(1) + 0.05 * random_vector(t, rng);
  const Matrix x = a * s;
  InitConfig cfg;
  const IcaResult r = ica_decompose(DataMatrix(x), 3, cfg);
  CHECK(r.merged == 1);
  CHECK(r.dictionary.atoms() == 3);

  cfg.merge_corr_threshold = 1.0;
  CHECK(ica_decompose(DataMatrix(x), 3, cfg).merged == 0);
}

TEST_CASE("ica_decompose is deterministic and validates K") {
  Rng rng = make_stream(5, 0);
  const Matrix x = random_matrix(2, 10, rng).transpose() * laplace_maps(2, 800, rng).topRows(2);
  InitConfig cfg;
  cfg.rng_seed = 17;
  const IcaResult a = ica_decompose(DataMatrix(x), 2, cfg);
  const IcaResult b = ica_decompose(DataMatrix(x), 2, cfg);
  CHECK(a.dictionary.values() == b.dictionary.values());
  CHECK(a.coefficients.values() == b.coefficients.values());
  CHECK_THROWS_AS(ica_decompose(DataMatrix(x), 11, cfg), std::domain_error);
  CHECK_THROWS_AS(ica_decompose(DataMatrix(x), 0, cfg), std::domain_error);
}

TEST_CASE("align_assisted") {
  Rng rng = make_stream(6, 0);
  const Matrix d = random_matrix(15, 4, rng);
  const Matrix s = random_matrix(4, 20, rng);

  const Factorization same = align_assisted(d, s, TaskTimeCourses(d.leftCols(2)));
  CHECK(same.dictionary.values() == d);
  CHECK((same.coefficients.values() - s).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(same.dictionary.assisted_count() == 2);

  const Factorization last = align_assisted(d, s, TaskTimeCourses(d.rightCols(1)));
  CHECK(last.dictionary.values().col(0) == d.col(3));
  CHECK(last.dictionary.values().middleCols(1, 3) == d.leftCols(3));
  CHECK(last.coefficients.values().row(0) == s.row(3));

  const Factorization flipped = align_assisted(d, s, TaskTimeCourses(Matrix(-d.col(2))));
  CHECK((flipped.coefficients.values().row(0) + s.row(2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((flipped.dictionary.values() * flipped.coefficients.values() - d * s).cwiseAbs().maxCoeff() < 1e-12);

  // A rescaled task course keeps the reconstruction through the map scaling.
  const Factorization scaled = align_assisted(d, s, TaskTimeCourses(Matrix(3.0 * d.col(1))));
  CHECK((scaled.dictionary.values() * scaled.coefficients.values() - d * s).cwiseAbs().maxCoeff() < 1e-12);

  // Non-assisted columns keep their multiset.
  Matrix delta(15, 2);
  delta << d.col(3) + 0.1 * random_vector(15, rng), d.col(1) + 0.1 * random_vector(15, rng);
  const Factorization two = align_assisted(d, s, TaskTimeCourses(delta));
  CHECK(two.dictionary.values().col(2) == d.col(0));
  CHECK(two.dictionary.values().col(3) == d.col(2));

  CHECK_THROWS_AS(align_assisted(d, s, TaskTimeCourses(random_matrix(15, 5, rng))), std::domain_error);
  CHECK_THROWS_AS(align_assisted(d, s, TaskTimeCourses(random_matrix(14, 1, rng))), std::domain_error);
}

TEST_CASE("refine_full_sparsity") {
  Rng rng = make_stream(7, 0);
  const Index t = 20, n = 120, k = 4;
  const Matrix d = random_matrix(t, k, rng).array() * 0.2;
  const Matrix s = random_matrix(k, n, rng);
  const Matrix x = random_matrix(t, k, rng) * random_matrix(k, n, rng);
  const TaskTimeCourses none = TaskTimeCourses::none(t);
  InitConfig cfg;
  cfg.refine_iters = 5;
  SolverConfig sc;
  sc.execution = Execution::serial;

  const ConstraintSpec loose(Vector::Constant(k, static_cast<double>(n)), 0.0);
  const double before = (x - d * s).squaredNorm();
  const Factorization a = refine_full_sparsity(DataMatrix(x), Dictionary(d, 0), CoefficientMatrix(s), none, loose, cfg, sc);
  CHECK((x - a.dictionary.values() * a.coefficients.values()).squaredNorm() <= before);

  const ConstraintSpec zero(Vector::Zero(k), 0.0);
  const Factorization z = refine_full_sparsity(DataMatrix(x), Dictionary(d, 0), CoefficientMatrix(s), none, zero, cfg, sc);
  CHECK(z.coefficients.values().isZero(0.0));

  CHECK_THROWS_AS(refine_full_sparsity(DataMatrix(x), Dictionary(d, 1), CoefficientMatrix(s), none, loose, cfg, sc),
                  std::domain_error);
}

TEST_CASE("refine_full_sparsity raises overall sparsity on the mini benchmark") {
  const SyntheticDataset data = mini_benchmark(2);
  const TaskTimeCourses delta(reference_task_courses(data, canonical_params()));
  InitConfig cfg;
  cfg.rng_seed = 2;
  const IcaResult ica = ica_decompose(data.x, 8, cfg);
  const Factorization aligned = align_assisted(ica.dictionary.values(), ica.coefficients.values(), delta);
  Vector phi(8);
  const double thetas[] = {94, 89, 91, 92, 86, 78, 55, 0};
  for (Index i = 0; i < 8; ++i) phi[i] = phi_from_theta(thetas[i], data.x.voxels());
  const ConstraintSpec spec(phi, 2.0);
  const Factorization refined = refine_full_sparsity(data.x, aligned.dictionary, aligned.coefficients, delta, spec, cfg);
  const Matrix& before = aligned.coefficients.values();
  const Matrix& after = refined.coefficients.values();
  const double sp_before = thresholded_sparsity_percentage(Eigen::Map<const Vector>(before.data(), before.size()));
  const double sp_after = thresholded_sparsity_percentage(Eigen::Map<const Vector>(after.data(), after.size()));
  CHECK(sp_after >= sp_before);
  CHECK(sp_after > 10.0);
}

TEST_CASE("order_by_sparsity") {
  Matrix d = Matrix::Identity(4, 4);
  Matrix s(4, 5);
  s << 1, 1, 1, 1, 1,   // assisted, dense, untouched
       1, 0, 0, 0, 0,
       1, 1, 0, 0, 0,
       1, 1, 1, 0, 0;
  const Factorization same = order_by_sparsity(Dictionary(d, 1), CoefficientMatrix(s));
  CHECK(same.coefficients.values() == s);
  CHECK(same.dictionary.values() == d);

  Matrix rev = s;
  rev.row(1) = s.row(3);
  rev.row(3) = s.row(1);
  const Factorization r = order_by_sparsity(Dictionary(d, 1), CoefficientMatrix(rev));
  CHECK(r.coefficients.values() == s);
  CHECK(r.dictionary.values().col(1) == d.col(3));
  CHECK(r.dictionary.values().col(3) == d.col(1));
  CHECK((r.dictionary.values() * r.coefficients.values() - d * rev).cwiseAbs().maxCoeff() == 0.0);

  Matrix ties(4, 5);
  ties << 1, 1, 1, 1, 1,
          2, 0, 0, 0, 0,
          3, 0, 0, 0, 0,
          4, 4, 0, 0, 0;
  const Factorization t = order_by_sparsity(Dictionary(Matrix::Identity(4, 4), 0), CoefficientMatrix(ties));
  CHECK(t.coefficients.values().row(0) == ties.row(1));
  CHECK(t.coefficients.values().row(1) == ties.row(2));
  CHECK(t.coefficients.values().row(2) == ties.row(3));
  CHECK(t.coefficients.values().row(3) == ties.row(0));
}

TEST_CASE("initialize pipeline") {
  const SyntheticDataset data = mini_benchmark(4);
  const TaskTimeCourses delta(reference_task_courses(data, canonical_params()));
  Vector phi(8);
  const double thetas[] = {94, 89, 91, 92, 86, 78, 55, 0};
  for (Index i = 0; i < 8; ++i) phi[i] = phi_from_theta(thetas[i], data.x.voxels());
  const ConstraintSpec spec(phi, 2.0);
  InitConfig cfg;
  cfg.rng_seed = 4;
  const InitResult a = initialize(data.x, 8, delta, spec, cfg);
  const InitResult b = initialize(data.x, 8, delta, spec, cfg);
  CHECK(a.start.dictionary.values() == b.start.dictionary.values());
  CHECK(a.start.coefficients.values() == b.start.coefficients.values());
  CHECK(a.start.dictionary.time_points() == 150);
  CHECK(a.start.dictionary.atoms() == 8);
  CHECK(a.start.dictionary.assisted_count() == 3);
  CHECK(a.start.coefficients.voxels() == 1600);
  for (Index i = 0; i < 3; ++i) {
    CHECK((a.start.dictionary.values().col(i) - delta.values().col(i)).squaredNorm() <= 2.0 + 1e-9);
  }
  double prev = 101.0;
  for (Index i = 3; i < 8; ++i) {
    const double th = thresholded_sparsity_percentage(a.start.coefficients.values().row(i).transpose());
    CHECK(th <= prev);
    prev = th;
  }

  const InitResult blind = initialize(data.x, 8, TaskTimeCourses::none(150), spec, cfg);
  CHECK(blind.start.dictionary.assisted_count() == 0);
}
