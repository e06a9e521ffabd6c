#include "iadl/postproc.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace iadl {

CoefficientMatrix pinv_spatial_maps(const Dictionary& d, const DataMatrix& x) {
  const Matrix& dv = d.values();
  if (dv.rows() != x.time_points()) {
    throw std::domain_error("pinv_spatial_maps: dictionary and data differ in time points");
  }
  const Eigen::MatrixXd dense = dv;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() ? sv[0] : 0.0;
  const double smallest = sv.size() ? sv[sv.size() - 1] : 0.0;
  const bool full_rank = dv.cols() <= dv.rows() && largest > 0.0 && smallest > 1e-10 * largest;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dense);
  if (!full_rank) {
    qr.setThreshold(1e-10);
    qr.compute(dense);
    const Index rank = std::min<Index>(qr.rank(), dv.cols() - 1);
    std::vector<Index> dependent;
    for (Index i = rank; i < dv.cols(); ++i) dependent.push_back(qr.colsPermutation().indices()[i]);
    std::sort(dependent.begin(), dependent.end());
    std::ostringstream msg;
    msg << "pinv_spatial_maps: dictionary is rank deficient; dependent columns:";
    for (Index c : dependent) msg << ' ' << c;
    throw std::domain_error(msg.str());
  }
  const Eigen::MatrixXd xs = x.values();
  return CoefficientMatrix(Matrix(qr.solve(xs)));
}

Index ZScoreResult::active_count() const {
  return static_cast<Index>(std::count(active.begin(), active.end(), true));
}

ZScoreResult zscore_threshold(const Vector& map, double z_min) {
  if (map.size() < 2) throw std::domain_error("zscore_threshold: need at least two voxels");
  if (std::isnan(z_min)) throw std::domain_error("zscore_threshold: threshold is NaN");
  const double mean = map.mean();
  const double var = (map.array() - mean).square().sum() / static_cast<double>(map.size() - 1);
  if (!(var > 0.0)) throw std::domain_error("zscore_threshold: constant map");
  ZScoreResult out;
  out.z = (map.array() - mean) / std::sqrt(var);
  out.active.resize(static_cast<std::size_t>(map.size()));
  for (Index i = 0; i < map.size(); ++i) out.active[static_cast<std::size_t>(i)] = out.z[i] >= z_min;
  return out;
}

std::pair<DataMatrix, TaskTimeCourses> concat_group(const std::vector<DataMatrix>& datasets,
                                                    const std::vector<TaskTimeCourses>& deltas) {
  if (datasets.empty()) throw std::domain_error("concat_group: no datasets given");
  if (deltas.size() != datasets.size()) throw std::domain_error("concat_group: one task set per dataset required");
  const Index n = datasets.front().voxels();
  const Index m = deltas.front().count();
  Index total = 0;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    if (datasets[i].voxels() != n) throw std::domain_error("concat_group: voxel counts differ");
    if (deltas[i].count() != m) throw std::domain_error("concat_group: task course counts differ");
    if (deltas[i].time_points() != datasets[i].time_points()) {
      throw std::domain_error("concat_group: task courses and data differ in length");
    }
    total += datasets[i].time_points();
  }
  Matrix x(total, n);
  Matrix delta(total, m);
  Index row = 0;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const Index t = datasets[i].time_points();
    x.middleRows(row, t) = datasets[i].values();
    if (m > 0) delta.middleRows(row, t) = deltas[i].values();
    row += t;
  }
  return {DataMatrix(std::move(x), datasets.front().tr()), TaskTimeCourses(std::move(delta))};
}

}  // namespace iadl
