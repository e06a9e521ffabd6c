#include "iadl/commands.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using iadl::io::ExperimentConfig;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool out_required) {
  sub->add_option("--config", c.config, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Overrides the configuration seed");
  auto* out = sub->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

ExperimentConfig config_of(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : iadl::io::load_config(c.config);
  cfg = iadl::cli::with_seed(std::move(cfg), c.seed);
  cfg.validate();
  return cfg;
}

void write_value(const std::string& out, const std::string& key, double value) {
  std::cout << std::setprecision(17) << value << '\n';
  if (!out.empty()) iadl::io::write_json(out, iadl::io::Json{{key, value}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-assisted dictionary learning"};
  app.require_subcommand(1);

  Common sim, ini, fit, eva, tune, atlas;
  std::string data_dir, init_dir, truth_dir, fit_dir, tune_data;
  std::string init_data;
  std::vector<double> thetas;

  auto* s_sim = app.add_subcommand("simulate", "Synthesise a benchmark dataset");
  add_common(s_sim, sim, true);

  auto* s_init = app.add_subcommand("init", "Run the initialiser");
  add_common(s_init, ini, true);
  s_init->add_option("--data", init_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);

  auto* s_fit = app.add_subcommand("fit", "Fit the model to a dataset");
  add_common(s_fit, fit, true);
  s_fit->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  s_fit->add_option("--init", init_dir, "Initialisation bundle to start from")->check(CLI::ExistingDirectory);

  auto* s_eval = app.add_subcommand("evaluate", "Score a fit against the ground truth");
  add_common(s_eval, eva, true);
  s_eval->add_option("--truth", truth_dir, "Simulation bundle")->required()->check(CLI::ExistingDirectory);
  s_eval->add_option("--fit", fit_dir, "Fit bundle")->required()->check(CLI::ExistingDirectory);

  auto* s_tune = app.add_subcommand("tune-cdelta", "Estimate the similarity radius");
  add_common(s_tune, tune, false);
  s_tune->add_option("--data", tune_data, "Dataset directory")->check(CLI::ExistingDirectory);

  auto* s_atlas = app.add_subcommand("atlas-sparsity", "Network sparsity from regional sparsities");
  add_common(s_atlas, atlas, false);
  s_atlas->add_option("thetas", thetas, "Regional sparsity percentages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (s_sim->parsed()) {
      const auto b = iadl::cli::cmd_simulate(config_of(sim), sim.out);
      std::cout << "simulate: " << b.x.rows() << " x " << b.x.cols() << " data, " << b.truth.count()
                << " sources -> " << sim.out << '\n';
    } else if (s_init->parsed()) {
      const auto b = iadl::cli::cmd_init(config_of(ini), init_data, ini.out);
      std::cout << "init: K = " << b.d.cols() << ", M = " << b.assisted_count << " -> " << ini.out << '\n';
    } else if (s_fit->parsed()) {
      std::optional<fs::path> init;
      if (!init_dir.empty()) init = init_dir;
      iadl::cli::cmd_fit(config_of(fit), data_dir, fit.out, init, &std::cout);
      std::cout << "fit: -> " << fit.out << '\n';
    } else if (s_eval->parsed()) {
      const auto ev = iadl::cli::cmd_evaluate(truth_dir, fit_dir, eva.out);
      std::cout << std::setprecision(4) << "evaluate: full-source match r_full assisted "
                << ev.by_full.full.assisted << ", brain-like " << ev.by_full.full.brain_like << "; time-course match r_time assisted "
                << ev.by_time.time.assisted << " -> " << eva.out << '\n';
    } else if (s_tune->parsed()) {
      std::optional<fs::path> data;
      if (!tune_data.empty()) data = tune_data;
      write_value(tune.out, "c_delta", iadl::cli::cmd_tune_cdelta(config_of(tune), data));
    } else if (s_atlas->parsed()) {
      if (thetas.empty() && !atlas.config.empty()) thetas = config_of(atlas).region_thetas;
      if (thetas.empty()) throw std::invalid_argument("atlas-sparsity: no regional sparsities given");
      write_value(atlas.out, "theta_fbn", iadl::cli::cmd_atlas_sparsity(thetas));
    }
  } catch (const std::exception& e) {
    std::cerr << "iadl: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
