#pragma once

#include "iadl/types.hpp"

#include <utility>
#include <vector>

namespace iadl {

/// S~ = pinv(D) X by column-pivoted QR least squares. Throws
/// std::domain_error naming the dependent columns when the smallest
/// singular value of D is below 1e-10 times the largest.
CoefficientMatrix pinv_spatial_maps(const Dictionary& d, const DataMatrix& x);

struct ZScoreResult {
  Vector z;
  std::vector<bool> active;  // z_i >= z_min
  Index active_count() const;
};

/// (map - mean) / sample std, thresholded at z_min. Constant maps are rejected.
ZScoreResult zscore_threshold(const Vector& map, double z_min = 1.97);

/// Temporal concatenation of subjects in the given order.
std::pair<DataMatrix, TaskTimeCourses> concat_group(const std::vector<DataMatrix>& datasets,
                                                    const std::vector<TaskTimeCourses>& deltas);

}  // namespace iadl
