#pragma once

#include "iadl/eval.hpp"
#include "iadl/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace iadl::cli {

namespace fs = std::filesystem;

/// Applies a --seed override: the config seed and, unless set explicitly
/// in the config, the initialiser seed.
io::ExperimentConfig with_seed(io::ExperimentConfig config, std::optional<std::uint64_t> seed);

/// Synthesises a dataset and writes a truth bundle to `out_dir`.
io::TruthBundle cmd_simulate(const io::ExperimentConfig& config, const fs::path& out_dir);

/// Runs the initialiser on the data in `data_dir` and writes an init bundle.
io::InitBundle cmd_init(const io::ExperimentConfig& config, const fs::path& data_dir, const fs::path& out_dir);

/// Initialises (or resumes from `init_dir`), runs the solver and writes a fit bundle.
io::FitBundle cmd_fit(const io::ExperimentConfig& config, const fs::path& data_dir, const fs::path& out_dir,
                      const std::optional<fs::path>& init_dir = std::nullopt, std::ostream* log = nullptr);

struct Evaluation {
  MatchReport by_full;  // matched on full-source correlations
  MatchReport by_time;  // matched on time-course correlations
  io::Json metrics;
};

/// Scores a fit against its truth bundle; writes `out_path` (JSON) and a
/// sibling CSV table with the same stem.
Evaluation cmd_evaluate(const fs::path& truth_dir, const fs::path& fit_dir, const fs::path& out_path);

/// c_delta for the configured conditions and alternate HRF.
double cmd_tune_cdelta(const io::ExperimentConfig& config, const std::optional<fs::path>& data_dir = std::nullopt);

double cmd_atlas_sparsity(const std::vector<double>& region_thetas);

}  // namespace iadl::cli
