#include "iadl/hrf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace iadl {

namespace {

// Gamma density with shape delay/dispersion and scale dispersion.
double gamma_pdf(double t, double delay, double dispersion) {
  if (t <= 0.0) return 0.0;
  const double shape = delay / dispersion;
  return std::exp((shape - 1.0) * std::log(t) - t / dispersion - std::lgamma(shape) -
                  shape * std::log(dispersion));
}

double draw_around(Rng& rng, double centre, double spread) {
  if (spread == 0.0 || centre == 0.0) return centre;
  std::uniform_real_distribution<double> dist((1.0 - spread) * centre, (1.0 + spread) * centre);
  return dist(rng);
}

}  // namespace

void TwoGammaParams::validate() const {
  const bool ok = peak_delay > 0.0 && undershoot_delay > 0.0 && peak_dispersion > 0.0 &&
                  undershoot_dispersion > 0.0 && kernel_length > 0.0 && undershoot_ratio >= 0.0 &&
                  std::isfinite(onset) && std::isfinite(kernel_length) &&
                  std::isfinite(undershoot_ratio);
  if (!ok) throw std::domain_error("TwoGammaParams: delays, dispersions and length must be positive");
}

TwoGammaParams canonical_params() { return TwoGammaParams{}; }

void ConditionSpec::validate() const {
  if (onsets.size() != durations.size()) {
    throw std::domain_error("ConditionSpec: onsets and durations differ in length");
  }
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (!(onsets[i] >= 0.0) || !(durations[i] >= 0.0) || !std::isfinite(onsets[i]) ||
        !std::isfinite(durations[i])) {
      throw std::domain_error("ConditionSpec: onsets and durations must be finite and non-negative");
    }
  }
  if (!std::isfinite(amplitude)) throw std::domain_error("ConditionSpec: amplitude must be finite");
}

Vector hrf_curve(const TwoGammaParams& p, double dt) {
  p.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::domain_error("hrf_curve: dt must be positive");
  const auto samples = static_cast<Index>(std::floor(p.kernel_length / dt + 1e-9)) + 1;
  Vector h(samples);
  for (Index k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * dt - p.onset;
    h[k] = gamma_pdf(t, p.peak_delay, p.peak_dispersion) -
           p.undershoot_ratio * gamma_pdf(t, p.undershoot_delay, p.undershoot_dispersion);
  }
  const double peak = h.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw std::domain_error("hrf_curve: response vanishes on the sampled support");
  return h / peak;
}

Vector canonical_hrf(double dt) { return hrf_curve(canonical_params(), dt); }

TwoGammaParams sample_hrf(Rng& rng, double spread) {
  if (!(spread >= 0.0 && spread < 1.0)) throw std::domain_error("sample_hrf: spread must lie in [0, 1)");
  const TwoGammaParams c = canonical_params();
  if (spread == 0.0) return c;
  for (;;) {
    TwoGammaParams p = c;
    p.peak_delay = draw_around(rng, c.peak_delay, spread);
    p.undershoot_delay = draw_around(rng, c.undershoot_delay, spread);
    p.peak_dispersion = draw_around(rng, c.peak_dispersion, spread);
    p.undershoot_dispersion = draw_around(rng, c.undershoot_dispersion, spread);
    p.undershoot_ratio = draw_around(rng, c.undershoot_ratio, spread);
    p.onset = draw_around(rng, c.onset, spread);
    if (p.peak_delay < p.undershoot_delay) return p;
  }
}

TwoGammaParams stretched_hrf(double spread) {
  if (!(spread >= 0.0 && spread < 1.0)) throw std::domain_error("stretched_hrf: spread must lie in [0, 1)");
  TwoGammaParams p = canonical_params();
  const double f = 1.0 + spread;
  p.peak_delay *= f;
  p.undershoot_delay *= f;
  p.peak_dispersion *= f;
  p.undershoot_dispersion *= f;
  return p;
}

Vector build_regressor(const ConditionSpec& cond, Index time_points, double tr,
                       std::vector<std::string>* warnings) {
  cond.validate();
  if (time_points < 1) throw std::domain_error("build_regressor: need at least one sample");
  if (!(tr > 0.0)) throw std::domain_error("build_regressor: tr must be positive");
  Vector u = Vector::Zero(time_points);
  const double scan_end = static_cast<double>(time_points) * tr;
  for (std::size_t b = 0; b < cond.onsets.size(); ++b) {
    const double onset = cond.onsets[b];
    const double offset = onset + cond.durations[b];
    bool hit = false;
    for (Index k = 0; k < time_points; ++k) {
      const double t = static_cast<double>(k) * tr;
      if (cond.durations[b] == 0.0) {
        if (t >= onset) {
          u[k] = cond.amplitude;
          hit = true;
          break;
        }
      } else if (t >= onset && t < offset) {
        u[k] = cond.amplitude;
        hit = true;
      }
    }
    if (!hit && warnings != nullptr) {
      std::ostringstream msg;
      msg << "block at onset " << onset << " s is outside the scan (" << scan_end << " s); ignored";
      warnings->push_back(msg.str());
    }
  }
  return u;
}

Vector task_time_course(const Vector& u, const Vector& h, bool normalize) {
  if (u.size() == 0 || h.size() == 0) throw std::domain_error("task_time_course: empty input");
  const Index n = u.size();
  Vector out = Vector::Zero(n);
  for (Index t = 0; t < n; ++t) {
    double acc = 0.0;
    const Index kmax = std::min<Index>(t, h.size() - 1);
    for (Index k = 0; k <= kmax; ++k) acc += h[k] * u[t - k];
    out[t] = acc;
  }
  if (normalize) {
    const double peak = out.cwiseAbs().maxCoeff();
    if (peak > 0.0) out /= peak;
  }
  return out;
}

double estimate_c_delta(const std::vector<ConditionSpec>& conditions, Index time_points, double tr,
                        const TwoGammaParams& reference, const TwoGammaParams& alternate,
                        bool normalize) {
  return estimate_c_delta(conditions, time_points, tr, hrf_curve(reference, tr),
                          hrf_curve(alternate, tr), normalize);
}

double estimate_c_delta(const std::vector<ConditionSpec>& conditions, Index time_points, double tr,
                        const Vector& h_ref, const Vector& h_alt, bool normalize) {
  if (conditions.empty()) throw std::domain_error("estimate_c_delta: no conditions given");
  double total = 0.0;
  for (const auto& cond : conditions) {
    const Vector u = build_regressor(cond, time_points, tr);
    total += (task_time_course(u, h_ref, normalize) - task_time_course(u, h_alt, normalize)).squaredNorm();
  }
  return total / static_cast<double>(conditions.size());
}

}  // namespace iadl
