#include "doctest.h"
#include "unit/helpers.hpp"

#include "iadl/constraints.hpp"

#include <cmath>

using namespace iadl;
using namespace iadl::testing;

namespace {

// Independent oracle: bisection on the monotone map
// gamma -> sum_i w_i max(|v_i| - gamma w_i, 0).
Vector bisection_projection(const Vector& v, const Vector& w, double phi) {
  if ((w.array() * v.array().abs()).sum() <= phi) return v;
  auto g = [&](double gamma) {
    return (w.array() * (v.array().abs() - gamma * w.array()).max(0.0)).sum();
  };
  double lo = 0.0;
  double hi = (v.array().abs() / w.array()).maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > phi ? lo : hi) = mid;
  }
  const double gamma = 0.5 * (lo + hi);
  return (v.array().sign() * (v.array().abs() - gamma * w.array()).max(0.0)).matrix();
}

// Uniform direction in the weighted l1 ball, scaled to a random radius.
Vector random_feasible(const Vector& w, double phi, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(w.size());
  for (Index i = 0; i < x.size(); ++i) x[i] = (u(rng) < 0.5 ? -1.0 : 1.0) * e(rng) / w[i];
  const double norm = (w.array() * x.array().abs()).sum();
  return x * (phi * std::pow(u(rng), 1.0 / static_cast<double>(x.size())) / norm);
}

}  // namespace

TEST_CASE("compute_weights examples") {
  CHECK(compute_weights(Vector::Zero(1), 1e-6)[0] == doctest::Approx(1e6));
  Vector pm(2);
  pm << 1.0, -1.0;
  const Vector w = compute_weights(pm, 1e-12);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(1.0));
  Vector three(1);
  three << 3.0;
  CHECK(compute_weights(three, 1.0)[0] == 0.25);
  CHECK_THROWS_AS(compute_weights(three, 0.0), std::domain_error);
  CHECK_THROWS_AS(compute_weights(three, -1.0), std::domain_error);
  CHECK_THROWS_AS(compute_weight_matrix(Matrix::Ones(2, 2), 0.0), std::domain_error);
}

TEST_CASE("weighted_l1_norm examples") {
  Vector x(2), w(2);
  x << 1, 2;
  w << 2, 0.5;
  CHECK(weighted_l1_norm(Vector::Zero(2), w) == 0.0);
  CHECK(weighted_l1_norm(x, w) == 3.0);
  Vector y(3);
  y << -1.5, 2.0, -0.25;
  CHECK(weighted_l1_norm(y, Vector::Ones(3)) == doctest::Approx(y.lpNorm<1>()));
  CHECK_THROWS_AS(weighted_l1_norm(y, w), std::domain_error);
}

TEST_CASE("weighted_l1_matrix_norm equals the sum of row norms") {
  Rng rng(11);
  const Matrix s = random_matrix(3, 4, rng);
  const Matrix w = random_matrix(3, 4, rng).cwiseAbs();
  double rows = 0.0;
  for (Index i = 0; i < 3; ++i) rows += weighted_l1_norm(s.row(i).transpose(), w.row(i).transpose());
  CHECK(weighted_l1_matrix_norm(s, w) == doctest::Approx(rows).epsilon(1e-14));
  CHECK(weighted_l1_matrix_norm(Matrix::Zero(3, 4), w) == 0.0);
  const Matrix one = s.topRows(1);
  CHECK(weighted_l1_matrix_norm(one, w.topRows(1)) ==
        doctest::Approx(weighted_l1_norm(one.row(0).transpose(), w.row(0).transpose())));
  CHECK_THROWS_AS(weighted_l1_matrix_norm(s, w.leftCols(3)), std::domain_error);
}

TEST_CASE("self-weighted norm is strictly below the l0 count") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    Vector x = random_vector(15, rng);
    for (Index i = 0; i < x.size(); i += 3) x[i] = 0.0;
    const double n = weighted_l1_norm(x, compute_weights(x, 1e-6));
    CHECK(n < static_cast<double>(active_count(x)));
  }
  CHECK(weighted_l1_norm(Vector::Zero(4), compute_weights(Vector::Zero(4), 1e-6)) == 0.0);
}

TEST_CASE("weighted l1 projection: fixed examples") {
  Vector v(2), w(2);
  v << 2, 0;
  w << 1, 1;
  const Vector x = project_weighted_l1_ball(v, w, 1.0);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == 0.0);
  CHECK(weighted_l1_threshold(v, w, 1.0) == doctest::Approx(1.0));

  Vector inside(3);
  inside << 0.1, -0.2, 0.3;
  const Vector same = project_weighted_l1_ball(inside, Vector::Ones(3), 1.0);
  CHECK(same == inside);

  const Vector zero = project_weighted_l1_ball(inside, Vector::Ones(3), 0.0);
  CHECK(zero.isZero());
  for (Index i = 0; i < 3; ++i) CHECK_FALSE(std::signbit(zero[i]));

  CHECK_THROWS_AS(project_weighted_l1_ball(v, w, -1.0), std::domain_error);
  Vector bad_w(2);
  bad_w << 1.0, 0.0;
  CHECK_THROWS_AS(project_weighted_l1_ball(v, bad_w, 1.0), std::domain_error);
  CHECK_THROWS_AS(project_weighted_l1_ball(v, Vector::Ones(3), 1.0), std::domain_error);
}

TEST_CASE("weighted l1 projection matches the bisection oracle and the KKT conditions") {
  Rng rng(42);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_real_distribution<double> frac(0.0, 1.2);
  for (int rep = 0; rep < 500; ++rep) {
    const Index n = len(rng);
    const Vector v = random_vector(n, rng, 2.0);
    const Vector w = random_positive(n, rng, 0.05, 5.0);
    const double phi = frac(rng) * weighted_l1_norm(v, w);
    const Vector x = project_weighted_l1_ball(v, w, phi);
    const Vector oracle = bisection_projection(v, w, phi);
    CHECK((x - oracle).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(weighted_l1_norm(x, w) <= phi * (1.0 + 1e-10) + 1e-12);

    if (weighted_l1_norm(v, w) > phi && phi > 0.0) {
      CHECK(weighted_l1_norm(x, w) == doctest::Approx(phi).epsilon(1e-10));
      const double gamma = weighted_l1_threshold(v, w, phi);
      for (Index i = 0; i < n; ++i) {
        if (x[i] != 0.0) {
          CHECK(std::signbit(x[i]) == std::signbit(v[i]));
          CHECK(v[i] - x[i] == doctest::Approx(gamma * w[i] * (x[i] > 0 ? 1.0 : -1.0)).epsilon(1e-9));
        } else {
          CHECK(std::abs(v[i]) <= gamma * w[i] * (1.0 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("weighted l1 projection beats random feasible points") {
  Rng rng(7);
  for (int rep = 0; rep < 60; ++rep) {
    const Index n = 1 + rep % 8;
    const Vector v = random_vector(n, rng, 2.0);
    const Vector w = random_positive(n, rng, 0.1, 3.0);
    const double phi = 0.5 * weighted_l1_norm(v, w);
    const Vector x = project_weighted_l1_ball(v, w, phi);
    const double best = (x - v).squaredNorm();
    for (int k = 0; k < 3000; ++k) {
      CHECK((random_feasible(w, phi, rng) - v).squaredNorm() >= best * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("degenerate weights use the bisection path") {
  Vector v(3), w(3);
  v << 1.0, -2.0, 3.0;
  w << 1e-8, 1.0, 1e8;
  const double phi = 0.5;
  const Vector x = project_weighted_l1_ball(v, w, phi);
  CHECK((x - bisection_projection(v, w, phi)).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(weighted_l1_norm(x, w) <= phi * (1.0 + 1e-9));
}

TEST_CASE("projections are idempotent, feasible and non-expansive") {
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 2 + rep % 10;
    const Vector a = random_vector(n, rng, 2.0);
    const Vector b = random_vector(n, rng, 2.0);
    const Vector w = random_positive(n, rng, 0.2, 2.0);
    const Vector delta = random_vector(n, rng);
    const double phi = 1.0;

    const Vector pa = project_weighted_l1_ball(a, w, phi);
    const Vector pb = project_weighted_l1_ball(b, w, phi);
    CHECK((project_weighted_l1_ball(pa, w, phi) - pa).norm() <= 1e-12);
    CHECK((pa - pb).norm() <= (a - b).norm() * (1.0 + 1e-12));

    const Vector sa = project_similarity_ball(a, delta, 0.5);
    const Vector sb = project_similarity_ball(b, delta, 0.5);
    CHECK((project_similarity_ball(sa, delta, 0.5) - sa).norm() <= 1e-12);
    CHECK((sa - delta).squaredNorm() <= 0.5 + 1e-10);
    CHECK((sa - sb).norm() <= (a - b).norm() * (1.0 + 1e-12));

    const Vector la = project_l2_ball(a, 1.0);
    const Vector lb = project_l2_ball(b, 1.0);
    CHECK((project_l2_ball(la, 1.0) - la).norm() <= 1e-12);
    CHECK(la.squaredNorm() <= 1.0 + 1e-10);
    CHECK((la - lb).norm() <= (a - b).norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("matrix ball projection equals the vectorised projection") {
  Rng rng(13);
  const Matrix s = random_matrix(3, 5, rng);
  const Matrix w = compute_weight_matrix(random_matrix(3, 5, rng), 0.1);
  const double phi = 0.3 * weighted_l1_matrix_norm(s, w);
  const Matrix p = project_weighted_l1_matrix_ball(s, w, phi);
  Vector vs(15), vw(15);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 5; ++j) {
      vs[i * 5 + j] = s(i, j);
      vw[i * 5 + j] = w(i, j);
    }
  const Vector oracle = bisection_projection(vs, vw, phi);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 5; ++j) CHECK(p(i, j) == doctest::Approx(oracle[i * 5 + j]).epsilon(1e-8));

  CHECK(project_weighted_l1_matrix_ball(s, w, 1e9) == s);
  const Matrix row = s.topRows(1);
  const Vector vrow = project_weighted_l1_ball(row.row(0).transpose(), w.row(0).transpose(), 0.4);
  CHECK((project_weighted_l1_matrix_ball(row, w.topRows(1), 0.4).row(0).transpose() - vrow).norm() == 0.0);
  CHECK_THROWS_AS(project_weighted_l1_matrix_ball(s, w.leftCols(2), 1.0), std::domain_error);
}

TEST_CASE("similarity and l2 ball examples") {
  Vector delta(2), b(2);
  delta << 1.0, 1.0;
  CHECK(project_similarity_ball(delta, delta, 0.3) == delta);
  b << 4.0, -3.0;
  CHECK(project_similarity_ball(b, delta, 0.0) == delta);
  Vector far(2);
  far << 3.0, 1.0;  // ||far - delta|| = 2
  const Vector half = project_similarity_ball(far, delta, 1.0);
  CHECK(half[0] == doctest::Approx(2.0));
  CHECK(half[1] == doctest::Approx(1.0));
  CHECK((half - delta).squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));

  Vector unit(2);
  unit << 0.6, 0.8;
  CHECK(project_l2_ball(unit, 1.0) == unit);
  Vector two(2);
  two << 2.0, 0.0;
  CHECK(project_l2_ball(two, 1.0)[0] == doctest::Approx(1.0));
  CHECK((project_l2_ball(b, 1.0) - project_similarity_ball(b, Vector::Zero(2), 1.0)).norm() < 1e-15);
  CHECK_THROWS_AS(project_l2_ball(b, 0.0), std::domain_error);
  CHECK_THROWS_AS(project_similarity_ball(b, Vector::Zero(3), 1.0), std::domain_error);
  CHECK_THROWS_AS(project_similarity_ball(b, delta, -1.0), std::domain_error);
}
