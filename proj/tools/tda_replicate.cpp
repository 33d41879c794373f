#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tdarep/csv.hpp"
#include "tdarep/cubical.hpp"
#include "tdarep/error.hpp"
#include "tdarep/harness.hpp"

namespace fs = std::filesystem;
using namespace tdarep;

namespace {

PersistenceDiagram pick_rank(const fs::path& path, int rank) {
  for (auto& pd : load_diagrams(path)) {
    if (pd.rank == rank) return pd;
  }
  throw ValidationError(path.string() + " has no points of rank " + std::to_string(rank));
}

ExperimentConfig base_config(const std::string& path) {
  return path.empty() ? desk_preset() : load_experiment_config(path);
}

int run(int argc, char** argv) {
  CLI::App app{"Fit RST Gibbs models to persistence diagrams, replicate them by MCMC and score the fit."};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;

  auto* sample = app.add_subcommand("sample", "Sample a point cloud from the configured shape");
  sample->add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
  sample->add_option("--seed", seed, "sampling seed");
  sample->add_option("--out", out, "output CSV")->required();

  std::string points_path;
  std::optional<double> eta;
  std::optional<std::size_t> resolution;
  int max_rank = 1;
  auto* persist = app.add_subcommand("persist", "Superlevel cubical persistence of a point cloud's KDE");
  persist->add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
  persist->add_option("--points", points_path, "point cloud CSV")->required()->check(CLI::ExistingFile);
  persist->add_option("--eta", eta, "KDE bandwidth");
  persist->add_option("--resolution", resolution, "grid points per axis");
  persist->add_option("--max-rank", max_rank, "highest homology rank");
  persist->add_option("--out", out, "output diagram CSV")->required();

  std::string diagram_path;
  int rank = 0;
  std::string variant_name = "modified";
  std::vector<int> ks;
  auto* fit = app.add_subcommand("fit", "Fit alpha and theta by maximum pseudolikelihood");
  fit->add_option("--config", config_path, "experiment config JSON (fit section)")->check(CLI::ExistingFile);
  fit->add_option("--diagram", diagram_path, "diagram CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--rank", rank, "homology rank to fit");
  fit->add_option("--variant", variant_name, "original or modified");
  fit->add_option("--K", ks, "cluster size; several values select by BIC");
  fit->add_option("--out", out, "output model JSON")->required();

  std::string model_path;
  McmcConfig mcmc;
  auto* rep = app.add_subcommand("replicate", "Generate replicated diagrams by Metropolis-Hastings");
  rep->add_option("--diagram", diagram_path, "diagram CSV")->required()->check(CLI::ExistingFile);
  rep->add_option("--rank", rank, "homology rank");
  rep->add_option("--model", model_path, "fitted model JSON")->required()->check(CLI::ExistingFile);
  rep->add_option("--grid", mcmc.grid_size, "proposal cells per axis");
  rep->add_option("--burn-in", mcmc.burn_in, "sweeps before the first replicate");
  rep->add_option("--replicates", mcmc.replicates, "number of replicates");
  rep->add_option("--spacing", mcmc.spacing, "sweeps between replicates");
  rep->add_flag("--rebuild-proposal", mcmc.rebuild_proposal, "refit the proposal before every sweep");
  rep->add_option("--seed", seed, "chain seed");
  rep->add_option("--out", out, "output directory")->required();

  std::string real_path;
  std::vector<std::string> sim_paths;
  GofOptions gof_options;
  std::string nn_space = "diagram";
  auto* gof = app.add_subcommand("gof", "Distances and nearest-neighbour statistics, real vs simulated");
  gof->add_option("--real", real_path, "real diagram CSV")->required()->check(CLI::ExistingFile);
  gof->add_option("--sim", sim_paths, "simulated diagram CSVs")->required()->check(CLI::ExistingFile);
  gof->add_option("--rank", rank, "homology rank");
  gof->add_option("--p", gof_options.p, "Wasserstein order");
  gof->add_option("--nn-space", nn_space, "diagram or projected");
  gof->add_option("--out", out, "output CSV")->required();

  auto* experiment = app.add_subcommand("experiment", "Run or resume a full experiment");
  experiment->add_option("--config", config_path, "experiment config JSON")->required()->check(CLI::ExistingFile);
  experiment->add_option("--seed", seed, "master seed");
  experiment->add_option("--out", out, "output directory");

  std::string result_dir;
  auto* plot = app.add_subcommand("plot", "Box-plot SVGs and CSVs for a finished experiment");
  plot->add_option("--result", result_dir, "experiment output directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--out", out, "plot directory (default <result>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sample->parsed()) {
    auto shape = base_config(config_path).shape;
    if (seed) shape.seed = *seed;
    save_point_cloud(sample_shape(shape), out);
  } else if (persist->parsed()) {
    const auto cfg = base_config(config_path);
    const auto pc = load_point_cloud(points_path);
    const auto field = kde_grid(fit_kde(pc, eta.value_or(cfg.filtration_eta)), bounding_box(pc),
                                resolution.value_or(cfg.field_resolution));
    save_diagrams(cubical_persistence(field, max_rank), out);
  } else if (fit->parsed()) {
    const auto cfg = base_config(config_path);
    const auto ppd = to_ppd(pick_rank(diagram_path, rank));
    const auto variant = variant_from_string(variant_name);
    if (ks.empty()) ks.push_back(cfg.K);
    const auto model = ks.size() == 1 ? fit_model(ppd, variant, ks.front(), cfg.fit)
                                      : select_k(ppd, variant, ks, cfg.fit);
    save_model(model, out);
    std::printf("alpha=%s theta=%s logpl=%s bic=%s%s\n", csv::format_double(model.params.alpha).c_str(),
                nlohmann::json(model.params.theta).dump().c_str(), csv::format_double(model.logpl).c_str(),
                csv::format_double(model.bic).c_str(), model.diagnostics.fallback_used ? " (alpha fallback)" : "");
  } else if (rep->parsed()) {
    if (seed) mcmc.seed = *seed;
    const auto result = replicate(pick_rank(diagram_path, rank), load_model(model_path), mcmc);
    save_replicates(result, mcmc, out);
  } else if (gof->parsed()) {
    gof_options.space = nn_space_from_string(nn_space);
    std::vector<PersistenceDiagram> real, sim;
    for (const auto& s : sim_paths) {
      real.push_back(pick_rank(real_path, rank));
      sim.push_back(load_diagram(s, real.back().convention.direction));
      sim.back().rank = rank;
    }
    const auto report = gof_report(real, sim, {"", 0, 0, rank}, gof_options);
    csv::write_atomic(out, gof_csv_header() + gof_to_csv_rows(report));
  } else if (experiment->parsed()) {
    auto cfg = load_experiment_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    const auto result = run_experiment(cfg);
    std::printf("%zu replications, %zu failed; manifest at %s\n", result.replications.size(), result.failed(),
                (cfg.output_dir / "manifest.json").string().c_str());
  } else if (plot->parsed()) {
    std::ifstream in(fs::path(result_dir) / "config.json");
    if (!in) throw ValidationError(result_dir + " has no config.json");
    auto cfg = nlohmann::json::parse(in).get<ExperimentConfig>();
    cfg.output_dir = result_dir;
    const auto result = run_experiment(cfg);
    const auto files = emit_plots(result, out.empty() ? fs::path(result_dir) / "plots" : fs::path(out));
    for (const auto& f : files) std::printf("%s\n", f.string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const FitFailure& e) {
    std::cerr << "fit failure: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid JSON: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
