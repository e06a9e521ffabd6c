#pragma once

#include "iadl/hrf.hpp"
#include "iadl/random.hpp"
#include "iadl/types.hpp"

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iadl {

enum class SourceKind {
  task,
  transient,
  artifact_subgaussian,
  artifact_gaussian,
  artifact_supergaussian,
};

bool is_artifact(SourceKind kind);
std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& name);

struct Grid {
  Index height = 0;
  Index width = 0;
  Index voxels() const noexcept { return height * width; }
};

struct BlobCenter {
  double row = 0.0;
  double col = 0.0;
};

struct SyntheticSourceSpec {
  SourceKind kind = SourceKind::transient;
  std::vector<BlobCenter> blob_centers;  // unused by artifacts
  double blob_radius = 5.0;              // voxels
  double plateau_fraction = 0.0;         // share of active voxels clipped to the peak level
  double target_sparsity = 90.0;         // percent of zero voxels
  std::optional<ConditionSpec> condition;  // task sources only
  double event_rate = 0.05;              // transient sources: events per sample

  void validate(const Grid& grid) const;
};

struct SyntheticDataset {
  DataMatrix x;
  Matrix clean;        // D~ S~ before noise
  SourceSet truth;
  std::vector<Index> assisted_indices;      // true-source index of each task source
  std::vector<ConditionSpec> task_conditions;  // same order as assisted_indices
  TwoGammaParams hrf;
  Grid grid;
  double tr = 2.0;
  double snr_db = 0.0;
  double noise_sigma = 0.0;
  double noise_power = 0.0;   // realised mean |n|^2 of the complex noise field
  double signal_power = 0.0;  // mean squared clean signal
};

/// Number of active voxels implied by a sparsity percentage on n voxels.
Index active_target(double sparsity, Index n);

/*
 * Sum of Gaussian bumps (sigma = radius / 2, truncated at 2 * radius) with
 * amplitudes drawn from U[0.7, 1]. The smallest values are zeroed until
 * exactly active_target voxels remain, the top plateau_fraction of those are
 * clipped to a common level and the map is scaled to max 1.
 */
Vector generate_spatial_map(const SyntheticSourceSpec& spec, const Grid& grid, Rng& rng);

/// Artifact time course (smoothed noise, unit peak) and spatial map (i.i.d.
/// uniform, normal or Laplace entries on a random support, max |.| = 1).
std::pair<Vector, Vector> generate_artifact_pair(SourceKind kind, double sparsity, Index time_points,
                                                 Index voxels, Rng& rng);

/// Random events of amplitude U[0.5, 1] convolved with the HRF, unit peak.
Vector transient_time_course(double event_rate, Index time_points, const Vector& hrf, Rng& rng);

/// x = sqrt((y + sigma g1)^2 + (sigma g2)^2) with sigma set from the SNR.
/// snr_db = +infinity disables noise.
struct NoiseResult {
  Matrix x;
  double sigma = 0.0;
  double noise_power = 0.0;
  double signal_power = 0.0;
};
NoiseResult add_rician_noise(const Matrix& clean, double snr_db, Rng& rng);

/// Builds sources from `source_rng` and noise from `noise_rng`.
SyntheticDataset assemble_dataset(const std::vector<SyntheticSourceSpec>& specs, const Grid& grid,
                                  Index time_points, double tr, const TwoGammaParams& hrf,
                                  double snr_db, Rng& source_rng, Rng& noise_rng);

/// Convenience overload deriving independent source and noise streams from one seed.
SyntheticDataset assemble_dataset(const std::vector<SyntheticSourceSpec>& specs, const Grid& grid,
                                  Index time_points, double tr, const TwoGammaParams& hrf,
                                  double snr_db, std::uint64_t seed);

/// Task time courses of the dataset's conditions under a reference HRF (T x M).
Matrix reference_task_courses(const SyntheticDataset& data, const TwoGammaParams& reference);

// Recipes.
struct Recipe {
  std::vector<SyntheticSourceSpec> specs;
  Grid grid;
  Index time_points = 0;
  double tr = 2.0;
};

/// 20 sources on a 100 x 100 grid, T = 300, tr = 2; fixed per-source
/// sparsity targets; task sources at indices 0, 10 and 13.
Recipe full_recipe();

/// 40 x 40 grid, T = 150, tr = 2: three task sources (two overlapping),
/// two transient sources and three artifacts.
Recipe mini_recipe();

SyntheticDataset mini_benchmark(std::uint64_t seed, const TwoGammaParams& hrf = canonical_params(),
                                double snr_db = 0.0);

SyntheticDataset full_benchmark(std::uint64_t seed, const TwoGammaParams& hrf = canonical_params(),
                                double snr_db = 0.0);

}  // namespace iadl
