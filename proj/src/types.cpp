#include "iadl/types.hpp"

#include <cmath>
#include <string>

namespace iadl {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::domain_error(std::string(what) + ": non-finite entry");
  }
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw std::domain_error(std::string(what) + ": non-finite entry");
  }
}

DataMatrix::DataMatrix(Matrix values, std::optional<double> tr)
    : values_(std::move(values)), tr_(tr) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::domain_error("DataMatrix: needs at least one time point and one voxel");
  }
  require_finite(values_, "DataMatrix");
  if (tr_ && !(*tr_ > 0.0)) {
    throw std::domain_error("DataMatrix: tr must be positive");
  }
}

Dictionary::Dictionary(Matrix values, Index assisted_count)
    : values_(std::move(values)), assisted_count_(assisted_count) {
  if (values_.cols() < 1) {
    throw std::domain_error("Dictionary: needs at least one atom");
  }
  if (assisted_count_ < 0 || assisted_count_ > values_.cols()) {
    throw std::domain_error("Dictionary: assisted count outside [0, K]");
  }
  require_finite(values_, "Dictionary");
}

CoefficientMatrix::CoefficientMatrix(Matrix values) : values_(std::move(values)) {
  require_finite(values_, "CoefficientMatrix");
}

void SourceSet::validate() const {
  if (time_courses.cols() != maps.rows()) {
    throw std::domain_error("SourceSet: time course and map counts differ");
  }
  if (static_cast<Index>(brain_like.size()) != maps.rows()) {
    throw std::domain_error("SourceSet: one brain-like flag per source required");
  }
  require_finite(time_courses, "SourceSet.time_courses");
  require_finite(maps, "SourceSet.maps");
}

TaskTimeCourses::TaskTimeCourses(Matrix values) : values_(std::move(values)) {
  require_finite(values_, "TaskTimeCourses");
}

TaskTimeCourses TaskTimeCourses::none(Index time_points) {
  return TaskTimeCourses(Matrix(time_points, 0));
}

ConstraintSpec::ConstraintSpec(Vector phi, double c_delta, double c_d, double epsilon)
    : phi_(std::move(phi)), c_delta_(c_delta), c_d_(c_d), epsilon_(epsilon) {
  require_finite(phi_, "ConstraintSpec.phi");
  if ((phi_.array() < 0.0).any()) {
    throw std::domain_error("ConstraintSpec: phi must be non-negative");
  }
  if (!(c_delta_ >= 0.0) || !std::isfinite(c_delta_)) {
    throw std::domain_error("ConstraintSpec: c_delta must be a finite non-negative number");
  }
  if (!(c_d_ > 0.0) || !std::isfinite(c_d_)) {
    throw std::domain_error("ConstraintSpec: c_d must be positive");
  }
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
    throw std::domain_error("ConstraintSpec: epsilon must be positive");
  }
}

void ConstraintSpec::bind(Index voxels) const {
  for (Index i = 0; i < phi_.size(); ++i) {
    if (phi_[i] > static_cast<double>(voxels)) {
      throw std::domain_error("ConstraintSpec: phi[" + std::to_string(i) +
                              "] exceeds the voxel count " + std::to_string(voxels));
    }
  }
}

ConstraintSpec ConstraintSpec::with_c_delta(double c_delta) const {
  return ConstraintSpec(phi_, c_delta, c_d_, epsilon_);
}

ConstraintSpec ConstraintSpec::with_phi(Vector phi) const {
  return ConstraintSpec(std::move(phi), c_delta_, c_d_, epsilon_);
}

double phi_from_theta(double theta, Index n) {
  if (!(theta >= 0.0 && theta <= 100.0)) {
    throw std::domain_error("phi_from_theta: theta must lie in [0, 100]");
  }
  if (n < 1) {
    throw std::domain_error("phi_from_theta: voxel count must be positive");
  }
  return static_cast<double>(n) * (100.0 - theta) / 100.0;
}

Index active_count(const Vector& v) {
  return (v.array() != 0.0).count();
}

Index thresholded_active_count(const Vector& v, double threshold) {
  return (v.array().abs() > threshold).count();
}

namespace {

double percentage_from_count(Index active, Index n) {
  // Integer numerator keeps e.g. 472 of 10000 at exactly 95.28.
  return 100.0 * static_cast<double>(n - active) / static_cast<double>(n);
}

}  // namespace

double sparsity_percentage(const Vector& v) {
  if (v.size() == 0) {
    throw std::domain_error("sparsity_percentage: empty vector");
  }
  return percentage_from_count(active_count(v), v.size());
}

double thresholded_sparsity_percentage(const Vector& v, double threshold) {
  if (v.size() == 0) {
    throw std::domain_error("sparsity_percentage: empty vector");
  }
  return percentage_from_count(thresholded_active_count(v, threshold), v.size());
}

}  // namespace iadl
