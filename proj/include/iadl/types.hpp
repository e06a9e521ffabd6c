#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iadl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Threshold used when counting non-zeros of solver outputs.
inline constexpr double kActiveThreshold = 1e-12;

/// Absolute tolerance for feasibility checks on solver iterates.
inline constexpr double kFeasibilityTol = 1e-9;

/// Throws std::domain_error if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

// ----------------------------------------------------------------------
// Observation matrix: rows are time samples, columns are voxels.
// ----------------------------------------------------------------------
class DataMatrix {
public:
  explicit DataMatrix(Matrix values, std::optional<double> tr = std::nullopt);

  const Matrix& values() const noexcept { return values_; }
  Index time_points() const noexcept { return values_.rows(); }
  Index voxels() const noexcept { return values_.cols(); }
  std::optional<double> tr() const noexcept { return tr_; }

private:
  Matrix values_;
  std::optional<double> tr_;
};

// ----------------------------------------------------------------------
// T x K dictionary. The first `assisted_count` columns are tied to
// task time courses.
// ----------------------------------------------------------------------
class Dictionary {
public:
  Dictionary(Matrix values, Index assisted_count);

  const Matrix& values() const noexcept { return values_; }
  Index atoms() const noexcept { return values_.cols(); }
  Index time_points() const noexcept { return values_.rows(); }
  Index assisted_count() const noexcept { return assisted_count_; }

private:
  Matrix values_;
  Index assisted_count_;
};

// K x N spatial maps, one row per source.
class CoefficientMatrix {
public:
  explicit CoefficientMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Index sources() const noexcept { return values_.rows(); }
  Index voxels() const noexcept { return values_.cols(); }

private:
  Matrix values_;
};

// T x M matrix whose columns are the imposed task time courses.
class TaskTimeCourses {
public:
  explicit TaskTimeCourses(Matrix values);
  /// Empty set of task time courses for T samples (blind mode).
  static TaskTimeCourses none(Index time_points);

  const Matrix& values() const noexcept { return values_; }
  Index count() const noexcept { return values_.cols(); }
  Index time_points() const noexcept { return values_.rows(); }

private:
  Matrix values_;
};

// Per-row sparsity budgets and the dictionary radii.
class ConstraintSpec {
public:
  ConstraintSpec(Vector phi, double c_delta, double c_d = 1.0, double epsilon = 1e-6);

  const Vector& phi() const noexcept { return phi_; }
  double c_delta() const noexcept { return c_delta_; }
  double c_d() const noexcept { return c_d_; }
  double epsilon() const noexcept { return epsilon_; }
  Index sources() const noexcept { return phi_.size(); }

  /// Checks phi_i <= n for every row; throws std::domain_error otherwise.
  void bind(Index voxels) const;

  ConstraintSpec with_c_delta(double c_delta) const;
  ConstraintSpec with_phi(Vector phi) const;

private:
  Vector phi_;
  double c_delta_;
  double c_d_;
  double epsilon_;
};

// Ground-truth (time course, spatial map) pairs: column j of
// time_courses goes with row j of maps.
struct SourceSet {
  Matrix time_courses;           // T x K
  Matrix maps;                   // K x N
  std::vector<bool> brain_like;  // per source; artifacts are false

  Index count() const noexcept { return maps.rows(); }
  /// Throws std::domain_error on inconsistent shapes or non-finite entries.
  void validate() const;
};

/// Inverts theta = (1 - phi/n) * 100. The result is not rounded.
double phi_from_theta(double theta, Index n);

/// Percentage of exactly-zero entries of v.
double sparsity_percentage(const Vector& v);

/// Number of entries with |v_i| > 0.
Index active_count(const Vector& v);

/// Number of entries with |v_i| > threshold (default kActiveThreshold).
Index thresholded_active_count(const Vector& v, double threshold = kActiveThreshold);

/// Sparsity percentage computed from the thresholded count.
double thresholded_sparsity_percentage(const Vector& v, double threshold = kActiveThreshold);

}  // namespace iadl
