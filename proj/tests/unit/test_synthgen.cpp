#include "doctest.h"

#include "iadl/synthgen.hpp"

#include <cmath>
#include <cstring>

using namespace iadl;

namespace {

double excess_kurtosis(const Vector& v) {
  const double mean = v.mean();
  const Eigen::ArrayXd c = v.array() - mean;
  const double m2 = c.square().mean();
  const double m4 = c.square().square().mean();
  return m4 / (m2 * m2) - 3.0;
}

Index shared_support(const Vector& a, const Vector& b) {
  return ((a.array() != 0.0) && (b.array() != 0.0)).count();
}

SyntheticSourceSpec blob(double row, double col, double sparsity, double radius = 4.0) {
  SyntheticSourceSpec s;
  s.kind = SourceKind::transient;
  s.blob_centers = {{row, col}};
  s.blob_radius = radius;
  s.target_sparsity = sparsity;
  return s;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("source kind names round-trip") {
  for (SourceKind k : {SourceKind::task, SourceKind::transient, SourceKind::artifact_subgaussian,
                       SourceKind::artifact_gaussian, SourceKind::artifact_supergaussian}) {
    CHECK(source_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(source_kind_from_string("banana"), std::domain_error);
}

TEST_CASE("active_target") {
  CHECK(active_target(1.0, 10000) == 9900);
  CHECK(active_target(95.28, 10000) == 472);
  CHECK(active_target(100.0, 10) == 0);
  CHECK_THROWS_AS(active_target(101.0, 10), std::domain_error);
}

TEST_CASE("generate_spatial_map hits the active budget") {
  const Grid grid{30, 30};
  Rng rng = make_stream(1, 0);
  const double r = 4.0;
  const double theta = 100.0 - 100.0 * M_PI * r * r / 900.0;
  const Vector m = generate_spatial_map(blob(15, 15, theta, r), grid, rng);
  const Index budget = active_target(theta, 900);
  CHECK(std::abs(active_count(m) - budget) <= 0.02 * budget);
  CHECK(m.maxCoeff() == 1.0);
  CHECK(m.minCoeff() >= 0.0);
}

TEST_CASE("generate_spatial_map plateau") {
  const Grid grid{30, 30};
  SyntheticSourceSpec s = blob(15, 15, 90.0);
  s.plateau_fraction = 0.0;
  Rng a = make_stream(2, 0);
  const Vector smooth = generate_spatial_map(s, grid, a);
  CHECK((smooth.array() == 1.0).count() == 1);

  s.plateau_fraction = 0.2;
  Rng b = make_stream(2, 0);
  const Vector flat = generate_spatial_map(s, grid, b);
  // Radially symmetric blobs produce ties at the clipping level.
  const Index at_peak = (flat.array() == 1.0).count();
  CHECK(at_peak >= static_cast<Index>(std::floor(0.2 * 90)));
  CHECK(at_peak < static_cast<Index>(std::floor(0.2 * 90)) + 8);
  CHECK(active_count(flat) == 90);
}

TEST_CASE("generate_spatial_map overlap grows as blobs approach") {
  const Grid grid{30, 40};
  Index previous = -1;
  for (double col : {32.0, 28.0, 24.0, 20.0, 16.0}) {
    Rng r1 = make_stream(3, 0), r2 = make_stream(3, 1);
    const Vector a = generate_spatial_map(blob(15, 10, 90.0, 5.0), grid, r1);
    const Vector b = generate_spatial_map(blob(15, col, 90.0, 5.0), grid, r2);
    const Index shared = shared_support(a, b);
    CHECK(shared >= previous);
    previous = shared;
  }
  CHECK(previous > 0);
}

TEST_CASE("generate_spatial_map errors") {
  const Grid grid{20, 20};
  Rng rng = make_stream(4, 0);
  CHECK_THROWS_AS(generate_spatial_map(blob(10, 10, 10.0, 1.0), grid, rng), std::domain_error);
  CHECK_THROWS_AS(generate_spatial_map(blob(30, 10, 90.0), grid, rng), std::domain_error);
  CHECK_THROWS_AS(generate_spatial_map(blob(10, 10, 120.0), grid, rng), std::domain_error);
}

TEST_CASE("generate_artifact_pair") {
  Rng rng = make_stream(5, 0);
  auto [course, map] = generate_artifact_pair(SourceKind::artifact_subgaussian, 1.0, 100, 10000, rng);
  CHECK(active_count(map) == 9900);
  CHECK(course.size() == 100);
  CHECK(course.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK(map.cwiseAbs().maxCoeff() == doctest::Approx(1.0));

  auto [c0, zero] = generate_artifact_pair(SourceKind::artifact_gaussian, 100.0, 10, 50, rng);
  CHECK(zero.isZero(0.0));

  const Index n = 100000;
  const double sub = excess_kurtosis(generate_artifact_pair(SourceKind::artifact_subgaussian, 0.0, 10, n, rng).second);
  const double gau = excess_kurtosis(generate_artifact_pair(SourceKind::artifact_gaussian, 0.0, 10, n, rng).second);
  const double sup = excess_kurtosis(generate_artifact_pair(SourceKind::artifact_supergaussian, 0.0, 10, n, rng).second);
  CHECK(sub < gau);
  CHECK(gau < sup);
  CHECK(sub < -1.0);
  CHECK(std::abs(gau) < 0.1);
  CHECK(sup > 2.0);

  CHECK_THROWS_AS(generate_artifact_pair(SourceKind::task, 50.0, 10, 10, rng), std::domain_error);
}

TEST_CASE("transient_time_course") {
  Rng rng = make_stream(6, 0);
  const Vector c = transient_time_course(0.05, 120, canonical_hrf(2.0), rng);
  CHECK(c.size() == 120);
  CHECK(c.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  Rng quiet = make_stream(6, 1);
  CHECK_FALSE(transient_time_course(0.0, 40, canonical_hrf(2.0), quiet).isZero());
}

TEST_CASE("add_rician_noise") {
  Rng rng = make_stream(7, 0);
  Matrix clean = Matrix::Random(60, 500);
  const NoiseResult none = add_rician_noise(clean, std::numeric_limits<double>::infinity(), rng);
  CHECK(bit_equal(none.x, clean));
  CHECK(none.sigma == 0.0);

  const NoiseResult zero_db = add_rician_noise(clean, 0.0, rng);
  CHECK(zero_db.noise_power == doctest::Approx(zero_db.signal_power).epsilon(0.02));
  CHECK(zero_db.x.minCoeff() >= 0.0);
  const NoiseResult ten_db = add_rician_noise(clean, 10.0, rng);
  CHECK(10.0 * std::log10(ten_db.signal_power / ten_db.noise_power) == doctest::Approx(10.0).epsilon(0.01));

  CHECK_THROWS_AS(add_rician_noise(clean, std::nan(""), rng), std::domain_error);
  CHECK_THROWS_AS(add_rician_noise(clean, -std::numeric_limits<double>::infinity(), rng), std::domain_error);
}

TEST_CASE("mini benchmark") {
  const SyntheticDataset a = mini_benchmark(42);
  const SyntheticDataset b = mini_benchmark(42);
  CHECK(bit_equal(a.x.values(), b.x.values()));
  CHECK(bit_equal(a.truth.maps, b.truth.maps));
  CHECK_FALSE(bit_equal(a.x.values(), mini_benchmark(43).x.values()));

  CHECK(a.x.time_points() == 150);
  CHECK(a.x.voxels() == 1600);
  CHECK(a.truth.count() == 8);
  CHECK(std::count(a.truth.brain_like.begin(), a.truth.brain_like.end(), true) == 5);
  CHECK(a.assisted_indices == std::vector<Index>{0, 1, 2});
  CHECK(a.task_conditions.size() == 3);
  CHECK_NOTHROW(a.truth.validate());
  CHECK((a.clean - a.truth.time_courses * a.truth.maps).norm() <= 1e-12 * a.clean.norm());
  CHECK(a.noise_power == doctest::Approx(a.signal_power).epsilon(0.02));

  for (Index j = 0; j < 8; ++j) {
    if (a.truth.brain_like[static_cast<std::size_t>(j)]) {
      CHECK(sparsity_percentage(a.truth.maps.row(j).transpose()) >= 85.0);
    }
  }

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticDataset d = mini_benchmark(seed);
    const Vector m1 = d.truth.maps.row(1).transpose();
    const Vector m2 = d.truth.maps.row(2).transpose();
    const double smaller = static_cast<double>(std::min(active_count(m1), active_count(m2)));
    CHECK(static_cast<double>(shared_support(m1, m2)) >= 0.15 * smaller);
  }
}

TEST_CASE("source and noise streams are independent") {
  const Recipe r = mini_recipe();
  Rng s1 = make_stream(9, 0), n1 = make_stream(9, 1);
  Rng s2 = make_stream(9, 0), n2 = make_stream(10, 1);
  const SyntheticDataset a = assemble_dataset(r.specs, r.grid, r.time_points, r.tr, canonical_params(), 0.0, s1, n1);
  const SyntheticDataset b = assemble_dataset(r.specs, r.grid, r.time_points, r.tr, canonical_params(), 0.0, s2, n2);
  CHECK(bit_equal(a.clean, b.clean));
  CHECK_FALSE(bit_equal(a.x.values(), b.x.values()));

  const SyntheticDataset clean =
      assemble_dataset(r.specs, r.grid, r.time_points, r.tr, canonical_params(),
                       std::numeric_limits<double>::infinity(), std::uint64_t{9});
  CHECK(bit_equal(clean.x.values(), clean.clean));
}

TEST_CASE("reference task courses under the subject HRF equal the true task courses") {
  const SyntheticDataset d = mini_benchmark(3);
  const Matrix delta = reference_task_courses(d, d.hrf);
  for (std::size_t i = 0; i < d.assisted_indices.size(); ++i) {
    CHECK((delta.col(static_cast<Index>(i)) - d.truth.time_courses.col(d.assisted_indices[i])).norm() == 0.0);
  }
}

TEST_CASE("full recipe realises the table sparsities") {
  const SyntheticDataset d = full_benchmark(1);
  const Recipe r = full_recipe();
  CHECK(d.truth.count() == 20);
  CHECK(d.x.voxels() == 10000);
  CHECK(d.x.time_points() == 300);
  CHECK(std::count(d.truth.brain_like.begin(), d.truth.brain_like.end(), false) == 5);
  for (Index j = 0; j < 20; ++j) {
    const double got = sparsity_percentage(d.truth.maps.row(j).transpose());
    CHECK(std::abs(got - r.specs[static_cast<std::size_t>(j)].target_sparsity) <= 2.0);
  }
  CHECK(d.assisted_indices == std::vector<Index>{0, 10, 13});
}
