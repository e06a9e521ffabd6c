#pragma once

#include "iadl/hrf.hpp"
#include "iadl/initializer.hpp"
#include "iadl/solver.hpp"
#include "iadl/synthgen.hpp"
#include "iadl/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace iadl::io {

namespace fs = std::filesystem;
using Json = nlohmann::json;

/// Every failure of this module is reported as an IoError with a one-line message.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------
// Matrix files
//
// Binary layout: "IADL" | u16 version | u32 rows | u32 cols | rows*cols f64,
// all little-endian, payload row-major. Paths ending in ".csv" are read and
// written as comma-separated text instead.
// ----------------------------------------------------------------------
inline constexpr std::uint16_t kMatrixFormatVersion = 1;

void save_matrix(const Matrix& m, const fs::path& path);
Matrix load_matrix(const fs::path& path);

void save_matrix_binary(const Matrix& m, const fs::path& path);
Matrix load_matrix_binary(const fs::path& path);
void save_matrix_csv(const Matrix& m, const fs::path& path);
Matrix load_matrix_csv(const fs::path& path);

// ----------------------------------------------------------------------
// Checksums and manifests
// ----------------------------------------------------------------------

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

/// Writes manifest.json in `dir` listing each file (relative to `dir`) with
/// its size and SHA-256, plus free-form metadata.
void write_manifest(const fs::path& dir, const std::vector<std::string>& files, const Json& meta = Json::object());

/// Reads manifest.json and re-hashes every listed file; throws on mismatch.
Json verify_manifest(const fs::path& dir);

// ----------------------------------------------------------------------
// Experiment configuration
// ----------------------------------------------------------------------

struct HrfChoice {
  enum class Mode { canonical, stretched, sampled, explicit_params };
  Mode mode = Mode::canonical;
  double spread = 0.3;
  TwoGammaParams params = canonical_params();  // explicit mode only

  /// Resolves to concrete parameters; `sampled` draws from `rng`.
  TwoGammaParams resolve(Rng& rng) const;
};

struct DataSpec {
  std::string recipe = "mini";  // "mini", "full" or "custom"
  double snr_db = 0.0;
  HrfChoice subject_hrf;        // HRF used to synthesise task courses
  Recipe custom;                // recipe == "custom"
};

struct ExperimentConfig {
  std::optional<Index> k;                      // number of atoms
  std::vector<ConditionSpec> conditions;       // assisted conditions; empty = use the dataset's
  std::optional<std::vector<double>> theta;    // per-atom sparsity percentages
  std::optional<std::vector<double>> phi;      // per-atom budgets
  std::optional<std::vector<double>> assisted_theta;  // shorthand expanded by the default ladder
  std::optional<double> c_delta;               // empty = "auto"
  double c_d = 1.0;
  double epsilon = 1e-6;
  bool blind = false;                          // ignore task time courses (M = 0)
  TwoGammaParams reference_hrf = canonical_params();
  HrfChoice alternate_hrf{HrfChoice::Mode::stretched, 0.3, canonical_params()};
  SolverConfig solver;
  InitConfig init;
  bool init_seed_explicit = false;             // init.rng_seed given in the document
  DataSpec data;
  std::vector<double> region_thetas;           // atlas-sparsity
  std::optional<Index> time_points;            // tune-cdelta without a dataset
  std::optional<double> tr;
  std::uint64_t seed = 0;

  void validate() const;
};

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const fs::path& path);

/// Free sources filled 99 down to 80 in equal steps followed by {70, 10, 0};
/// with three or fewer free sources only the densest tail entries are used.
std::vector<double> default_theta_ladder(const std::vector<double>& assisted, Index k);

/// Per-atom budgets for a dataset with n voxels. Exactly one of theta, phi
/// or assisted_theta must be set and the result has length K.
Vector resolve_phi(const ExperimentConfig& c, Index k, Index n);

Json to_json(const TwoGammaParams& p);
TwoGammaParams hrf_params_from_json(const Json& j);
Json to_json(const ConditionSpec& c);
ConditionSpec condition_from_json(const Json& j);
Json to_json(const SolverConfig& c);
Json to_json(const InitConfig& c);
Json to_json(const SolveTrace& t);

// ----------------------------------------------------------------------
// Bundles
// ----------------------------------------------------------------------

/// Simulation output: X.iadl, truth_D.iadl, truth_S.iadl, delta.iadl,
/// dataset.json and manifest.json.
struct TruthBundle {
  Matrix x;
  SourceSet truth;
  Matrix delta;
  std::vector<Index> assisted_indices;
  std::vector<ConditionSpec> conditions;
  std::vector<std::string> kinds;
  TwoGammaParams hrf;
  double tr = 2.0;
  Grid grid;
  double snr_db = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

void write_truth_bundle(const fs::path& dir, const TruthBundle& b);
TruthBundle read_truth_bundle(const fs::path& dir);

/// Fit output: D.iadl, S.iadl, trace.csv, params.json and manifest.json.
struct FitBundle {
  Matrix d;
  Matrix s;
  Index assisted_count = 0;
  SolveTrace trace;
  Json params;  // resolved parameter set
};

void write_fit_bundle(const fs::path& dir, const FitBundle& b);
FitBundle read_fit_bundle(const fs::path& dir);

/// Initialiser output: D0.iadl, S0.iadl, init.json and manifest.json.
struct InitBundle {
  Matrix d;
  Matrix s;
  Index assisted_count = 0;
  Json info;
};

void write_init_bundle(const fs::path& dir, const InitBundle& b);
InitBundle read_init_bundle(const fs::path& dir);

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

}  // namespace iadl::io
