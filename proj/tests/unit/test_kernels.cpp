#include "doctest.h"
#include "unit/helpers.hpp"

#include "iadl/constraints.hpp"
#include "iadl/kernels.hpp"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace iadl;
using namespace iadl::testing;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

struct ThreadGuard {
#ifdef _OPENMP
  int saved = omp_get_max_threads();
  explicit ThreadGuard(int n) { omp_set_num_threads(n); }
  ~ThreadGuard() { omp_set_num_threads(saved); }
#else
  explicit ThreadGuard(int) {}
#endif
};

}  // namespace

TEST_CASE("thread_count is positive") { CHECK(kernels::thread_count() >= 1); }

TEST_CASE("parallel kernels reproduce the serial reference bit for bit") {
  ThreadGuard guard(4);
  Rng rng = make_stream(11, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const Index t = 20 + trial, k = 6, n = 300 + 17 * trial;
    const Matrix x = random_matrix(t, n, rng);
    const Matrix d = random_matrix(t, k, rng);
    const Matrix a = random_matrix(k, n, rng);
    const Vector phi = random_positive(k, rng, 5.0, 80.0);

    const Matrix ws = kernels::weights(a, 1e-6, Execution::serial);
    const Matrix wp = kernels::weights(a, 1e-6, Execution::parallel);
    CHECK(bit_equal(ws, wp));
    CHECK(bit_equal(ws, compute_weight_matrix(a, 1e-6)));

    Matrix as = a, ap = a;
    const Vector vs = kernels::project_rows(as, ws, phi, Execution::serial);
    const Vector vp = kernels::project_rows(ap, wp, phi, Execution::parallel);
    CHECK(bit_equal(as, ap));
    CHECK(bit_equal(vs, vp));

    CHECK(bit_equal(kernels::row_weighted_norms(as, ws, Execution::serial),
                    kernels::row_weighted_norms(ap, wp, Execution::parallel)));

    const Matrix delta = random_matrix(t, 2, rng);
    Matrix bs = d, bp = d;
    const Vector cs = kernels::project_columns(bs, delta, 0.5, 1.0, Execution::serial);
    const Vector cp = kernels::project_columns(bp, delta, 0.5, 1.0, Execution::parallel);
    CHECK(bit_equal(bs, bp));
    CHECK(bit_equal(cs, cp));

    CHECK(kernels::residual_sq(x, d, a, Execution::serial) ==
          kernels::residual_sq(x, d, a, Execution::parallel));
  }
}

TEST_CASE("project_rows matches the per-row projection") {
  Rng rng = make_stream(12, 0);
  const Matrix a = random_matrix(4, 50, rng);
  const Matrix w = compute_weight_matrix(a, 1e-3);
  Vector phi(4);
  phi << 1.0, 10.0, 1e9, 0.0;
  Matrix p = a;
  const Vector viol = kernels::project_rows(p, w, phi, Execution::serial);
  for (Index i = 0; i < 4; ++i) {
    const Vector expected = project_weighted_l1_ball(a.row(i).transpose(), w.row(i).transpose(), phi[i]);
    CHECK((p.row(i).transpose() - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(viol[i] <= 1e-9 * std::max(1.0, phi[i]));
  }
  CHECK(p.row(2) == a.row(2));
  CHECK(p.row(3).isZero(0.0));
}

TEST_CASE("project_columns applies similarity then l2 balls") {
  Matrix b(3, 3);
  b << 3, 0, 2,
       0, 0, 0,
       0, 4, 0;
  Matrix delta = Matrix::Zero(3, 1);
  delta(0, 0) = 1.0;
  kernels::project_columns(b, delta, 1.0, 1.0, Execution::serial);
  CHECK(b(0, 0) == doctest::Approx(2.0));
  CHECK(b(2, 1) == doctest::Approx(1.0));
  CHECK(b(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("residual_sq matches the direct expression") {
  Rng rng = make_stream(13, 0);
  const Matrix x = random_matrix(7, 40, rng);
  const Matrix d = random_matrix(7, 3, rng);
  const Matrix s = random_matrix(3, 40, rng);
  CHECK(kernels::residual_sq(x, d, s, Execution::serial) ==
        doctest::Approx((x - d * s).squaredNorm()).epsilon(1e-12));
}
