#include "iadl/commands.hpp"

#include "iadl/hrf.hpp"
#include "iadl/initializer.hpp"
#include "iadl/solver.hpp"
#include "iadl/synthgen.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

namespace iadl::cli {

namespace {

// RNG stream ids derived from the experiment seed.
constexpr std::uint64_t kSubjectHrfStream = 7;
constexpr std::uint64_t kAlternateHrfStream = 11;

Recipe recipe_of(const io::ExperimentConfig& c) {
  if (c.data.recipe == "full") return full_recipe();
  if (c.data.recipe == "custom") return c.data.custom;
  return mini_recipe();
}

std::vector<ConditionSpec> recipe_conditions(const Recipe& r) {
  std::vector<ConditionSpec> out;
  for (const auto& s : r.specs) {
    if (s.kind == SourceKind::task && s.condition) out.push_back(*s.condition);
  }
  return out;
}

struct LoadedData {
  DataMatrix x;
  std::vector<ConditionSpec> conditions;
  std::optional<Matrix> delta;
  double tr = 2.0;
  std::string x_sha256;
};

LoadedData load_data(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw io::IoError("'" + dir.string() + "': data directory does not exist");
  if (fs::exists(dir / "manifest.json")) io::verify_manifest(dir);
  fs::path x_path = dir / "X.iadl";
  if (!fs::exists(x_path) && fs::exists(dir / "X.csv")) x_path = dir / "X.csv";
  if (!fs::exists(x_path)) throw io::IoError("'" + dir.string() + "': no X.iadl or X.csv data matrix");
  const std::string sha = io::sha256_file(x_path);
  Matrix x = io::load_matrix(x_path);
  double tr = 2.0;
  std::vector<ConditionSpec> conditions;
  std::optional<Matrix> delta;
  if (fs::exists(dir / "dataset.json")) {
    const io::Json meta = io::read_json(dir / "dataset.json");
    if (meta.contains("tr")) tr = meta.at("tr").get<double>();
    if (meta.contains("conditions")) {
      for (const auto& c : meta.at("conditions")) conditions.push_back(io::condition_from_json(c));
    }
  }
  if (fs::exists(dir / "delta.iadl")) delta = io::load_matrix(dir / "delta.iadl");
  return LoadedData{DataMatrix(std::move(x), tr), std::move(conditions), std::move(delta), tr, sha};
}

struct Resolved {
  Index k = 0;
  TaskTimeCourses delta{Matrix(0, 0)};
  ConstraintSpec spec{Vector::Zero(1), 0.0};
  std::string c_delta_source;
  std::optional<TwoGammaParams> alternate;
  std::vector<ConditionSpec> conditions;
};

Index resolve_k(const io::ExperimentConfig& c) {
  if (c.k) return *c.k;
  if (c.theta) return static_cast<Index>(c.theta->size());
  if (c.phi) return static_cast<Index>(c.phi->size());
  throw io::IoError("config: 'K' is required unless 'theta' or 'phi' fixes it");
}

Resolved resolve(const io::ExperimentConfig& c, const LoadedData& data) {
  Resolved r;
  r.k = resolve_k(c);
  const Index t = data.x.time_points();
  const Index n = data.x.voxels();
  r.conditions = c.conditions.empty() ? data.conditions : c.conditions;

  Matrix delta(t, 0);
  if (!c.blind) {
    if (!r.conditions.empty()) {
      const Vector h = hrf_curve(c.reference_hrf, data.tr);
      delta.resize(t, static_cast<Index>(r.conditions.size()));
      for (std::size_t i = 0; i < r.conditions.size(); ++i) {
        delta.col(static_cast<Index>(i)) = task_time_course(build_regressor(r.conditions[i], t, data.tr), h, true);
      }
    } else if (data.delta) {
      if (data.delta->rows() != t) throw io::IoError("delta.iadl does not match the data's time points");
      delta = *data.delta;
    } else {
      throw io::IoError("no task time courses: give 'conditions' in the config or set 'blind'");
    }
  }
  if (delta.cols() > r.k) throw io::IoError("more task time courses than atoms (K)");
  r.delta = TaskTimeCourses(delta);

  double c_delta = 0.0;
  if (c.c_delta) {
    c_delta = *c.c_delta;
    r.c_delta_source = "config";
  } else if (c.blind) {
    r.c_delta_source = "unused";
  } else {
    if (r.conditions.empty()) throw io::IoError("c_delta \"auto\" needs task conditions");
    Rng rng = make_stream(c.seed, kAlternateHrfStream);
    r.alternate = c.alternate_hrf.resolve(rng);
    c_delta = estimate_c_delta(r.conditions, t, data.tr, c.reference_hrf, *r.alternate);
    r.c_delta_source = "auto";
  }
  r.spec = ConstraintSpec(io::resolve_phi(c, r.k, n), c_delta, c.c_d, c.epsilon);
  return r;
}

io::Json resolved_params(const io::ExperimentConfig& c, const Resolved& r, const LoadedData& data) {
  const Index n = data.x.voxels();
  std::vector<double> theta, phi;
  for (Index i = 0; i < r.k; ++i) {
    phi.push_back(r.spec.phi()[i]);
    theta.push_back(100.0 * (1.0 - r.spec.phi()[i] / static_cast<double>(n)));
  }
  io::Json conds = io::Json::array();
  for (const auto& cond : r.conditions) conds.push_back(io::to_json(cond));
  io::Json j = {{"K", r.k},
                {"M", r.delta.count()},
                {"theta", theta},
                {"phi", phi},
                {"c_delta", r.spec.c_delta()},
                {"c_delta_source", r.c_delta_source},
                {"c_d", r.spec.c_d()},
                {"epsilon", r.spec.epsilon()},
                {"blind", c.blind},
                {"conditions", conds},
                {"reference_hrf", io::to_json(c.reference_hrf)},
                {"solver", io::to_json(c.solver)},
                {"init", io::to_json(c.init)},
                {"seed", c.seed},
                {"time_points", data.x.time_points()},
                {"voxels", n},
                {"tr", data.tr},
                {"data_sha256", data.x_sha256}};
  if (r.alternate) j["alternate_hrf"] = io::to_json(*r.alternate);
  return j;
}

void check_init_bundle(const io::InitBundle& b, const Resolved& r, const LoadedData& data) {
  if (b.d.rows() != data.x.time_points() || b.s.cols() != data.x.voxels() || b.d.cols() != r.k) {
    throw io::IoError("init bundle shapes do not match the data and K");
  }
  if (b.assisted_count != r.delta.count()) {
    throw io::IoError("init bundle has " + std::to_string(b.assisted_count) + " assisted atoms, config implies " +
                      std::to_string(r.delta.count()));
  }
  if (b.info.contains("data_sha256") && b.info.at("data_sha256").get<std::string>() != data.x_sha256) {
    throw io::IoError("init bundle was computed from different data");
  }
}

std::string manifest_sha(const io::Json& manifest, const std::string& file) {
  for (const auto& f : manifest.at("files")) {
    if (f.at("path").get<std::string>() == file) return f.at("sha256").get<std::string>();
  }
  return {};
}

io::Json report_json(const MatchReport& r) {
  auto summary = [](const MatchSummary& s) {
    return io::Json{{"assisted", s.assisted}, {"brain_like", s.brain_like}, {"all", s.all}};
  };
  return {{"mapping", r.mapping},
          {"r_full", std::vector<double>(r.r_full.data(), r.r_full.data() + r.r_full.size())},
          {"r_time", std::vector<double>(r.r_time.data(), r.r_time.data() + r.r_time.size())},
          {"summary", {{"r_full", summary(r.full)}, {"r_time", summary(r.time)}}}};
}

}  // namespace

io::ExperimentConfig with_seed(io::ExperimentConfig config, std::optional<std::uint64_t> seed) {
  if (!seed) return config;
  config.seed = *seed;
  if (!config.init_seed_explicit) config.init.rng_seed = *seed;
  return config;
}

io::TruthBundle cmd_simulate(const io::ExperimentConfig& config, const fs::path& out_dir) {
  const Recipe recipe = recipe_of(config);
  Rng hrf_rng = make_stream(config.seed, kSubjectHrfStream);
  const TwoGammaParams subject = config.data.subject_hrf.resolve(hrf_rng);
  const SyntheticDataset data = assemble_dataset(recipe.specs, recipe.grid, recipe.time_points, recipe.tr, subject,
                                                 config.data.snr_db, config.seed);
  io::TruthBundle b;
  b.x = data.x.values();
  b.truth = data.truth;
  b.delta = reference_task_courses(data, config.reference_hrf);
  b.assisted_indices = data.assisted_indices;
  b.conditions = data.task_conditions;
  for (const auto& s : recipe.specs) b.kinds.push_back(to_string(s.kind));
  b.hrf = subject;
  b.tr = data.tr;
  b.grid = data.grid;
  b.snr_db = data.snr_db;
  b.noise_sigma = data.noise_sigma;
  b.seed = config.seed;
  io::write_truth_bundle(out_dir, b);
  return b;
}

io::InitBundle cmd_init(const io::ExperimentConfig& config, const fs::path& data_dir, const fs::path& out_dir) {
  const LoadedData data = load_data(data_dir);
  const Resolved r = resolve(config, data);
  const InitResult init = initialize(data.x, r.k, r.delta, r.spec, config.init, config.solver);
  io::InitBundle b;
  b.d = init.start.dictionary.values();
  b.s = init.start.coefficients.values();
  b.assisted_count = init.start.dictionary.assisted_count();
  b.info = resolved_params(config, r, data);
  b.info["ica_converged"] = init.ica_converged;
  b.info["merged"] = init.merged;
  io::write_init_bundle(out_dir, b);
  return b;
}

io::FitBundle cmd_fit(const io::ExperimentConfig& config, const fs::path& data_dir, const fs::path& out_dir,
                      const std::optional<fs::path>& init_dir, std::ostream* log) {
  const LoadedData data = load_data(data_dir);
  const Resolved r = resolve(config, data);
  io::Json params = resolved_params(config, r, data);

  std::optional<Dictionary> d0;
  std::optional<CoefficientMatrix> s0;
  if (init_dir) {
    const io::InitBundle b = io::read_init_bundle(*init_dir);
    check_init_bundle(b, r, data);
    d0.emplace(b.d, b.assisted_count);
    s0.emplace(b.s);
    params["init_source"] = init_dir->string();
  } else {
    const InitResult init = initialize(data.x, r.k, r.delta, r.spec, config.init, config.solver);
    d0 = init.start.dictionary;
    s0 = init.start.coefficients;
    params["init_source"] = "initializer";
    params["ica_converged"] = init.ica_converged;
    params["merged"] = init.merged;
  }

  const SolveResult result = run_iadl(data.x, *d0, *s0, r.delta, r.spec, config.solver);
  if (log != nullptr) {
    *log << "fit: " << result.trace.iterations_run << " iterations, objective "
         << (result.trace.objective.empty() ? 0.0 : result.trace.objective.back()) << ", c_delta "
         << r.spec.c_delta() << "\n";
    if (!result.trace.monotone()) *log << "fit: warning: objective trace is not monotone\n";
  }
  io::FitBundle b;
  b.d = result.dictionary.values();
  b.s = result.coefficients.values();
  b.assisted_count = result.dictionary.assisted_count();
  b.trace = result.trace;
  b.params = params;
  io::write_fit_bundle(out_dir, b);
  return b;
}

Evaluation cmd_evaluate(const fs::path& truth_dir, const fs::path& fit_dir, const fs::path& out_path) {
  const io::TruthBundle truth = io::read_truth_bundle(truth_dir);
  const io::FitBundle fit = io::read_fit_bundle(fit_dir);
  const io::Json manifest = io::read_json(truth_dir / "manifest.json");
  const std::string truth_sha = manifest_sha(manifest, "X.iadl");
  if (!fit.params.contains("data_sha256") || fit.params.at("data_sha256").get<std::string>() != truth_sha) {
    throw io::IoError("fit in '" + fit_dir.string() + "' was not computed from the data in '" + truth_dir.string() +
                      "' (checksum mismatch)");
  }
  if (fit.d.rows() != truth.truth.time_courses.rows() || fit.s.cols() != truth.truth.maps.cols()) {
    throw io::IoError("fit and truth shapes disagree");
  }
  const auto m = static_cast<std::size_t>(fit.assisted_count);
  if (m > truth.assisted_indices.size()) {
    throw io::IoError("fit has more assisted atoms than the truth has task sources");
  }
  const std::vector<Index> assisted(truth.assisted_indices.begin(),
                                    truth.assisted_indices.begin() + static_cast<std::ptrdiff_t>(m));

  Evaluation ev;
  ev.by_full = match_and_score(truth.truth, fit.d, fit.s, assisted, MatchMode::full_source);
  ev.by_time = match_and_score(truth.truth, fit.d, fit.s, assisted, MatchMode::time_course);
  ev.metrics = {{"true_sources", truth.truth.count()},
                {"estimated_sources", fit.d.cols()},
                {"assisted_indices", assisted},
                {"full_source", report_json(ev.by_full)},
                {"time_course", report_json(ev.by_time)}};
  io::write_json(out_path, ev.metrics);

  fs::path table = out_path;
  table.replace_extension(out_path.extension() == ".csv" ? ".table.csv" : ".csv");
  std::ofstream csv(table, std::ios::trunc);
  if (!csv) throw io::IoError("cannot write '" + table.string() + "'");
  csv << "source,kind,brain_like,assisted,match_full,r_full,match_time,r_time\n";
  csv.precision(17);
  for (Index i = 0; i < truth.truth.count(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    const bool is_assisted = std::find(assisted.begin(), assisted.end(), i) != assisted.end();
    csv << i << ',' << (u < truth.kinds.size() ? truth.kinds[u] : "") << ',' << int(truth.truth.brain_like[u]) << ','
        << int(is_assisted) << ',' << ev.by_full.mapping[u] << ',' << ev.by_full.r_full[i] << ','
        << ev.by_time.mapping[u] << ',' << ev.by_time.r_time[i] << '\n';
  }
  return ev;
}

double cmd_tune_cdelta(const io::ExperimentConfig& config, const std::optional<fs::path>& data_dir) {
  std::vector<ConditionSpec> conditions = config.conditions;
  const Recipe recipe = recipe_of(config);
  Index t = recipe.time_points;
  double tr = recipe.tr;
  if (data_dir) {
    const LoadedData data = load_data(*data_dir);
    t = data.x.time_points();
    tr = data.tr;
    if (conditions.empty()) conditions = data.conditions;
  }
  if (config.time_points) t = *config.time_points;
  if (config.tr) tr = *config.tr;
  if (conditions.empty()) conditions = recipe_conditions(recipe);
  if (conditions.empty()) throw io::IoError("tune-cdelta: no task conditions to evaluate");
  Rng rng = make_stream(config.seed, kAlternateHrfStream);
  const TwoGammaParams alternate = config.alternate_hrf.resolve(rng);
  return estimate_c_delta(conditions, t, tr, config.reference_hrf, alternate);
}

double cmd_atlas_sparsity(const std::vector<double>& region_thetas) { return atlas_fbn_sparsity(region_thetas); }

}  // namespace iadl::cli
