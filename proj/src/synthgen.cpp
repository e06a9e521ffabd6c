#include "iadl/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iadl {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Indices of the k largest entries (ties to the lower index).
std::vector<Index> top_k(const Vector& v, Index k) {
  std::vector<Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] > v[b]; });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

Vector smooth(const Vector& x, double sigma) {
  const auto half = static_cast<Index>(std::ceil(3.0 * sigma));
  Vector kernel(2 * half + 1);
  for (Index i = -half; i <= half; ++i) {
    kernel[i + half] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
  }
  kernel /= kernel.sum();
  Vector out = Vector::Zero(x.size());
  for (Index t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (Index i = -half; i <= half; ++i) {
      const Index s = std::clamp<Index>(t + i, 0, x.size() - 1);
      acc += kernel[i + half] * x[s];
    }
    out[t] = acc;
  }
  return out;
}

Vector unit_peak(Vector v) {
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak > 0.0) v /= peak;
  return v;
}

double artifact_draw(SourceKind kind, Rng& rng) {
  switch (kind) {
    case SourceKind::artifact_subgaussian: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      return u(rng);
    }
    case SourceKind::artifact_gaussian: {
      std::normal_distribution<double> g(0.0, 1.0);
      return g(rng);
    }
    case SourceKind::artifact_supergaussian: {
      // Laplace by inverse CDF.
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      double p = u(rng);
      while (std::abs(p) >= 0.5) p = u(rng);
      return -std::copysign(1.0, p) * std::log(1.0 - 2.0 * std::abs(p));
    }
    default:
      throw std::domain_error("artifact_draw: not an artifact kind");
  }
}

}  // namespace

bool is_artifact(SourceKind kind) {
  return kind == SourceKind::artifact_subgaussian || kind == SourceKind::artifact_gaussian ||
         kind == SourceKind::artifact_supergaussian;
}

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::task: return "task";
    case SourceKind::transient: return "transient";
    case SourceKind::artifact_subgaussian: return "artifact_subgaussian";
    case SourceKind::artifact_gaussian: return "artifact_gaussian";
    case SourceKind::artifact_supergaussian: return "artifact_supergaussian";
  }
  return "unknown";
}

SourceKind source_kind_from_string(const std::string& name) {
  for (SourceKind k : {SourceKind::task, SourceKind::transient, SourceKind::artifact_subgaussian,
                       SourceKind::artifact_gaussian, SourceKind::artifact_supergaussian}) {
    if (to_string(k) == name) return k;
  }
  throw std::domain_error("unknown source kind '" + name + "'");
}

void SyntheticSourceSpec::validate(const Grid& grid) const {
  if (!(target_sparsity >= 0.0 && target_sparsity <= 100.0)) {
    throw std::domain_error("SyntheticSourceSpec: target sparsity outside [0, 100]");
  }
  if (!(plateau_fraction >= 0.0 && plateau_fraction <= 1.0)) {
    throw std::domain_error("SyntheticSourceSpec: plateau fraction outside [0, 1]");
  }
  if (kind == SourceKind::task && !condition) {
    throw std::domain_error("SyntheticSourceSpec: task source needs a condition");
  }
  if (condition) condition->validate();
  if (!(event_rate >= 0.0 && event_rate <= 1.0)) {
    throw std::domain_error("SyntheticSourceSpec: event rate outside [0, 1]");
  }
  if (is_artifact(kind)) return;
  if (!(blob_radius > 0.0)) throw std::domain_error("SyntheticSourceSpec: blob radius must be positive");
  if (blob_centers.empty()) throw std::domain_error("SyntheticSourceSpec: no blob centres given");
  for (const auto& c : blob_centers) {
    if (c.row < 0.0 || c.col < 0.0 || c.row > static_cast<double>(grid.height - 1) ||
        c.col > static_cast<double>(grid.width - 1)) {
      throw std::domain_error("SyntheticSourceSpec: blob centre outside the grid");
    }
  }
}

Index active_target(double sparsity, Index n) {
  if (!(sparsity >= 0.0 && sparsity <= 100.0)) throw std::domain_error("active_target: sparsity outside [0, 100]");
  return static_cast<Index>(std::llround(static_cast<double>(n) * (100.0 - sparsity) / 100.0));
}

Vector generate_spatial_map(const SyntheticSourceSpec& spec, const Grid& grid, Rng& rng) {
  if (grid.height < 1 || grid.width < 1) throw std::domain_error("generate_spatial_map: empty grid");
  spec.validate(grid);
  if (is_artifact(spec.kind)) throw std::domain_error("generate_spatial_map: artifact kinds have no blobs");
  const Index n = grid.voxels();
  const double sigma = spec.blob_radius / 2.0;
  const double cutoff = 2.0 * spec.blob_radius;
  std::uniform_real_distribution<double> amp(0.7, 1.0);

  Vector map = Vector::Zero(n);
  for (const auto& c : spec.blob_centers) {
    const double a = amp(rng);
    for (Index r = 0; r < grid.height; ++r) {
      for (Index q = 0; q < grid.width; ++q) {
        const double dr = static_cast<double>(r) - c.row;
        const double dc = static_cast<double>(q) - c.col;
        const double dist_sq = dr * dr + dc * dc;
        if (dist_sq > cutoff * cutoff) continue;
        map[r * grid.width + q] += a * std::exp(-0.5 * dist_sq / (sigma * sigma));
      }
    }
  }

  const Index k = active_target(spec.target_sparsity, n);
  const Index support = (map.array() > 0.0).count();
  if (k > support) {
    throw std::domain_error("generate_spatial_map: blobs cover " + std::to_string(support) +
                            " voxels but " + std::to_string(k) + " must be active");
  }
  Vector out = Vector::Zero(n);
  if (k == 0) return out;
  const std::vector<Index> keep = top_k(map, k);
  for (Index i : keep) out[i] = map[i];

  const auto plateau = static_cast<Index>(std::floor(spec.plateau_fraction * static_cast<double>(k)));
  if (plateau > 0) {
    const double level = map[keep[static_cast<std::size_t>(plateau - 1)]];
    for (Index i = 0; i < plateau; ++i) out[keep[static_cast<std::size_t>(i)]] = level;
  }
  return out / out.maxCoeff();
}

std::pair<Vector, Vector> generate_artifact_pair(SourceKind kind, double sparsity, Index time_points,
                                                 Index voxels, Rng& rng) {
  if (!is_artifact(kind)) throw std::domain_error("generate_artifact_pair: not an artifact kind");
  if (time_points < 1 || voxels < 1) throw std::domain_error("generate_artifact_pair: empty shape");
  const Index k = active_target(sparsity, voxels);

  std::normal_distribution<double> g(0.0, 1.0);
  Vector noise(time_points);
  for (Index t = 0; t < time_points; ++t) noise[t] = g(rng);
  Vector course = unit_peak(smooth(noise, 2.0));

  std::vector<Index> positions(static_cast<std::size_t>(voxels));
  std::iota(positions.begin(), positions.end(), Index{0});
  std::shuffle(positions.begin(), positions.end(), rng);
  Vector map = Vector::Zero(voxels);
  for (Index i = 0; i < k; ++i) {
    double v = artifact_draw(kind, rng);
    while (v == 0.0) v = artifact_draw(kind, rng);
    map[positions[static_cast<std::size_t>(i)]] = v;
  }
  return {course, unit_peak(map)};
}

Vector transient_time_course(double event_rate, Index time_points, const Vector& hrf, Rng& rng) {
  std::bernoulli_distribution event(event_rate);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  Vector u = Vector::Zero(time_points);
  for (Index t = 0; t < time_points; ++t) {
    if (event(rng)) u[t] = amp(rng);
  }
  if (u.isZero()) u[time_points / 2] = 1.0;
  return task_time_course(u, hrf, true);
}

NoiseResult add_rician_noise(const Matrix& clean, double snr_db, Rng& rng) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw std::domain_error("add_rician_noise: SNR must be finite or +infinity");
  }
  NoiseResult out;
  out.signal_power = clean.squaredNorm() / static_cast<double>(clean.size());
  if (snr_db == std::numeric_limits<double>::infinity()) {
    out.x = clean;
    return out;
  }
  // The complex perturbation sigma (g1 + i g2) carries power 2 sigma^2.
  out.sigma = std::sqrt(out.signal_power / (2.0 * std::pow(10.0, snr_db / 10.0)));
  std::normal_distribution<double> g(0.0, 1.0);
  out.x.resize(clean.rows(), clean.cols());
  double noise_sum = 0.0;
  for (Index t = 0; t < clean.rows(); ++t) {
    for (Index j = 0; j < clean.cols(); ++j) {
      const double n1 = out.sigma * g(rng);
      const double n2 = out.sigma * g(rng);
      noise_sum += n1 * n1 + n2 * n2;
      const double re = clean(t, j) + n1;
      out.x(t, j) = std::sqrt(re * re + n2 * n2);
    }
  }
  out.noise_power = noise_sum / static_cast<double>(clean.size());
  return out;
}

SyntheticDataset assemble_dataset(const std::vector<SyntheticSourceSpec>& specs, const Grid& grid,
                                  Index time_points, double tr, const TwoGammaParams& hrf,
                                  double snr_db, Rng& source_rng, Rng& noise_rng) {
  if (specs.empty()) throw std::domain_error("assemble_dataset: no sources given");
  if (time_points < 1 || !(tr > 0.0)) throw std::domain_error("assemble_dataset: bad sampling");
  const Index n = grid.voxels();
  const auto k = static_cast<Index>(specs.size());
  const Vector h = hrf_curve(hrf, tr);

  SourceSet truth;
  truth.time_courses.resize(time_points, k);
  truth.maps.resize(k, n);
  truth.brain_like.resize(specs.size());
  std::vector<Index> assisted;
  std::vector<ConditionSpec> conditions;

  for (Index j = 0; j < k; ++j) {
    const auto& spec = specs[static_cast<std::size_t>(j)];
    spec.validate(grid);
    truth.brain_like[static_cast<std::size_t>(j)] = !is_artifact(spec.kind);
    if (is_artifact(spec.kind)) {
      auto [course, map] = generate_artifact_pair(spec.kind, spec.target_sparsity, time_points, n, source_rng);
      truth.time_courses.col(j) = course;
      truth.maps.row(j) = map.transpose();
      continue;
    }
    truth.maps.row(j) = generate_spatial_map(spec, grid, source_rng).transpose();
    if (spec.kind == SourceKind::task) {
      truth.time_courses.col(j) = task_time_course(build_regressor(*spec.condition, time_points, tr), h, true);
      assisted.push_back(j);
      conditions.push_back(*spec.condition);
    } else {
      truth.time_courses.col(j) = transient_time_course(spec.event_rate, time_points, h, source_rng);
    }
  }

  Matrix clean = truth.time_courses * truth.maps;
  NoiseResult noisy = add_rician_noise(clean, snr_db, noise_rng);
  SyntheticDataset out{DataMatrix(std::move(noisy.x), tr), std::move(clean), std::move(truth),
                       std::move(assisted), std::move(conditions), hrf, grid, tr, snr_db,
                       noisy.sigma, noisy.noise_power, noisy.signal_power};
  return out;
}

SyntheticDataset assemble_dataset(const std::vector<SyntheticSourceSpec>& specs, const Grid& grid,
                                  Index time_points, double tr, const TwoGammaParams& hrf,
                                  double snr_db, std::uint64_t seed) {
  Rng sources = make_stream(seed, 0);
  Rng noise = make_stream(seed, 1);
  return assemble_dataset(specs, grid, time_points, tr, hrf, snr_db, sources, noise);
}

Matrix reference_task_courses(const SyntheticDataset& data, const TwoGammaParams& reference) {
  const Index t = data.x.time_points();
  const Vector h = hrf_curve(reference, data.tr);
  Matrix delta(t, static_cast<Index>(data.task_conditions.size()));
  for (std::size_t i = 0; i < data.task_conditions.size(); ++i) {
    delta.col(static_cast<Index>(i)) = task_time_course(build_regressor(data.task_conditions[i], t, data.tr), h, true);
  }
  return delta;
}

namespace {

SyntheticSourceSpec brain(SourceKind kind, double sparsity, std::vector<BlobCenter> centers, Index n,
                          double plateau = 0.1) {
  SyntheticSourceSpec s;
  s.kind = kind;
  s.target_sparsity = sparsity;
  s.blob_centers = std::move(centers);
  s.plateau_fraction = plateau;
  // Blob radius chosen so the blobs' discs roughly hold the active voxels.
  const double active = static_cast<double>(active_target(sparsity, n));
  s.blob_radius = std::max(1.5, std::sqrt(active / (kPi * static_cast<double>(s.blob_centers.size()))));
  return s;
}

SyntheticSourceSpec artifact(SourceKind kind, double sparsity) {
  SyntheticSourceSpec s;
  s.kind = kind;
  s.target_sparsity = sparsity;
  return s;
}

ConditionSpec blocks(double first, double period, double duration, double scan_length) {
  ConditionSpec c;
  for (double t = first; t < scan_length; t += period) {
    c.onsets.push_back(t);
    c.durations.push_back(duration);
  }
  return c;
}

// Deterministic jittered event train.
ConditionSpec events(double first, double spacing, double jitter, int jitter_cycle, double duration,
                     double scan_length) {
  ConditionSpec c;
  int i = 0;
  for (double t = first; t < scan_length; t += spacing, ++i) {
    const double onset = t + jitter * static_cast<double>(i % jitter_cycle);
    if (onset >= scan_length) break;
    c.onsets.push_back(onset);
    c.durations.push_back(duration);
  }
  return c;
}

}  // namespace

Recipe full_recipe() {
  Recipe r;
  r.grid = {100, 100};
  r.time_points = 300;
  r.tr = 2.0;
  const Index n = r.grid.voxels();
  const double scan = static_cast<double>(r.time_points) * r.tr;
  using K = SourceKind;
  auto& s = r.specs;
  s.push_back(brain(K::task, 95.28, {{85, 35}, {85, 65}}, n));
  s.back().condition = blocks(20.0, 40.0, 20.0, scan);
  s.push_back(brain(K::transient, 95.33, {{15, 50}}, n));
  s.push_back(brain(K::transient, 95.53, {{60, 50}}, n));
  s.push_back(brain(K::transient, 88.25, {{22, 50}, {62, 46}, {45, 28}}, n));
  s.push_back(brain(K::transient, 93.30, {{50, 42}, {50, 58}}, n));
  s.push_back(brain(K::transient, 97.04, {{50, 35}, {50, 65}}, n));
  s.push_back(brain(K::transient, 88.07, {{30, 38}, {30, 62}}, n));
  s.push_back(brain(K::transient, 91.82, {{40, 20}, {40, 80}}, n));
  s.push_back(brain(K::transient, 85.51, {{35, 75}, {62, 86}}, n));
  s.push_back(brain(K::transient, 92.67, {{52, 50}}, n));
  s.push_back(brain(K::task, 91.60, {{55, 84}}, n));
  s.back().condition = events(8.0, 24.0, 3.0, 4, 2.0, scan);
  s.push_back(brain(K::transient, 91.53, {{55, 12}}, n));
  s.push_back(brain(K::transient, 94.51, {{70, 22}}, n));
  s.push_back(brain(K::task, 94.57, {{62, 76}}, n));
  s.back().condition = events(14.0, 30.0, 4.0, 3, 2.0, scan);
  s.push_back(brain(K::transient, 71.95, {{78, 30}, {78, 70}}, n));
  s.push_back(artifact(K::artifact_subgaussian, 1.00));
  s.push_back(artifact(K::artifact_gaussian, 1.00));
  s.push_back(artifact(K::artifact_supergaussian, 1.99));
  s.push_back(artifact(K::artifact_subgaussian, 86.14));
  s.push_back(artifact(K::artifact_supergaussian, 71.84));
  return r;
}

Recipe mini_recipe() {
  Recipe r;
  r.grid = {40, 40};
  r.time_points = 150;
  r.tr = 2.0;
  const Index n = r.grid.voxels();
  const double scan = static_cast<double>(r.time_points) * r.tr;
  using K = SourceKind;
  auto& s = r.specs;
  s.push_back(brain(K::task, 95.0, {{9, 9}}, n));
  s.back().condition = blocks(10.0, 40.0, 20.0, scan);
  s.push_back(brain(K::task, 90.0, {{26, 16}}, n));
  s.back().condition = events(6.0, 22.0, 3.0, 4, 2.0, scan);
  s.push_back(brain(K::task, 92.0, {{26, 24}}, n));
  s.back().condition = events(15.0, 27.0, 4.0, 3, 2.0, scan);
  s.push_back(brain(K::transient, 94.0, {{8, 28}, {14, 34}}, n));
  s.push_back(brain(K::transient, 88.0, {{33, 33}}, n));
  s.push_back(artifact(K::artifact_subgaussian, 1.0));
  s.push_back(artifact(K::artifact_gaussian, 60.0));
  s.push_back(artifact(K::artifact_supergaussian, 80.0));
  return r;
}

SyntheticDataset mini_benchmark(std::uint64_t seed, const TwoGammaParams& hrf, double snr_db) {
  const Recipe r = mini_recipe();
  return assemble_dataset(r.specs, r.grid, r.time_points, r.tr, hrf, snr_db, seed);
}

SyntheticDataset full_benchmark(std::uint64_t seed, const TwoGammaParams& hrf, double snr_db) {
  const Recipe r = full_recipe();
  return assemble_dataset(r.specs, r.grid, r.time_points, r.tr, hrf, snr_db, seed);
}

}  // namespace iadl
