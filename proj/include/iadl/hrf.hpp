#pragma once

#include "iadl/random.hpp"
#include "iadl/types.hpp"

#include <string>
#include <vector>

namespace iadl {

// Two-gamma haemodynamic response parameters, all times in seconds.
struct TwoGammaParams {
  double peak_delay = 6.0;
  double undershoot_delay = 16.0;
  double peak_dispersion = 1.0;
  double undershoot_dispersion = 1.0;
  double undershoot_ratio = 1.0 / 6.0;
  double onset = 0.0;
  double kernel_length = 32.0;

  /// Throws std::domain_error when an invariant is violated.
  void validate() const;
  bool operator==(const TwoGammaParams&) const = default;
};

/// The conventional canonical parameter set.
TwoGammaParams canonical_params();

// Block design of one experimental condition.
struct ConditionSpec {
  std::vector<double> onsets;
  std::vector<double> durations;
  double amplitude = 1.0;

  void validate() const;
};

/// h(t) = g(t; peak) - ratio * g(t; undershoot) on t = 0, dt, ..., kernel_length,
/// scaled so that max |h| = 1.
Vector hrf_curve(const TwoGammaParams& p, double dt);

Vector canonical_hrf(double dt);

/// Each parameter drawn from U[(1 - spread) p_c, (1 + spread) p_c]; the
/// kernel length is kept at its canonical value.
TwoGammaParams sample_hrf(Rng& rng, double spread = 0.3);

/// Delays and dispersions stretched to the (1 + spread) edge of the
/// sampling box. Used as the default alternate HRF for c_delta tuning.
TwoGammaParams stretched_hrf(double spread = 0.3);

/// Boxcar sampled at k * tr. Blocks starting at or after the end of the
/// scan are skipped and reported through `warnings` when given.
Vector build_regressor(const ConditionSpec& cond, Index time_points, double tr,
                       std::vector<std::string>* warnings = nullptr);

/// Causal convolution truncated to len(u); optionally scaled to max |delta| = 1.
Vector task_time_course(const Vector& u, const Vector& h, bool normalize = true);

/// Mean over conditions of ||delta_ref - delta_alt||^2.
double estimate_c_delta(const std::vector<ConditionSpec>& conditions, Index time_points, double tr,
                        const TwoGammaParams& reference, const TwoGammaParams& alternate,
                        bool normalize = true);

/// Same estimator on explicitly sampled kernels.
double estimate_c_delta(const std::vector<ConditionSpec>& conditions, Index time_points, double tr,
                        const Vector& h_reference, const Vector& h_alternate, bool normalize = true);

}  // namespace iadl
