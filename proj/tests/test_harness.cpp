#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tdarep/error.hpp"
#include "tdarep/harness.hpp"

namespace fs = std::filesystem;
using namespace tdarep;

namespace {

ExperimentConfig tiny(const std::string& dir) {
  ExperimentConfig c = desk_preset();
  c.shape.n = 200;
  c.replications = 2;
  c.field_resolution = 30;
  c.grid_sizes = {10, 20};
  c.burn_ins = {2};
  c.fit.quadrature_nodes = 16;
  c.output_dir = fs::temp_directory_path() / dir;
  fs::remove_all(c.output_dir);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("presets and config validation") {
  const auto desk = desk_preset();
  CHECK(desk.replications == 10);
  CHECK(desk.shape.n == 300);
  CHECK(desk.field_resolution == 50);
  CHECK(desk.homology_ranks == std::vector<int>{0});
  const auto paper = paper_preset();
  CHECK(paper.replications == 100);
  CHECK(paper.field_resolution == 100);

  ExperimentConfig s3 = desk_preset();
  s3.shape.kind = ShapeKind::sphere;
  s3.shape.sphere_dim = 3;
  s3.homology_ranks.clear();
  s3.field_resolution = 100;
  s3.resolve();
  CHECK(s3.field_resolution == 15);
  CHECK(s3.homology_ranks == std::vector<int>{0, 1, 2});

  ExperimentConfig s2 = desk_preset();
  s2.shape.kind = ShapeKind::sphere;
  s2.homology_ranks.clear();
  s2.resolve();
  CHECK(s2.homology_ranks == std::vector<int>{0, 1});

  auto bad = desk_preset();
  bad.homology_ranks = {2};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = desk_preset();
  bad.grid_sizes = {};
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  const nlohmann::json j = paper;
  const auto back = j.get<ExperimentConfig>();
  CHECK(nlohmann::json(back) == j);
}

TEST_CASE("experiment bookkeeping, determinism and resumption") {
  auto config = tiny("tdarep_test_harness_a");
  const auto result = run_experiment(config);
  REQUIRE(result.replications.size() == 2);
  for (const auto& rep : result.replications) {
    CHECK(rep.ok);
    CHECK(rep.real.size() >= 1);
    CHECK(rep.fits.size() == 2);
    CHECK(rep.sims.size() == 2 * 2);
    for (const auto& s : rep.sims) CHECK(s.diagram.pairs.size() == rep.real_rank(0)->pairs.size());
  }
  CHECK(result.gof.size() == 2 * 2);
  for (const auto& g : result.gof) CHECK(g.rows.size() == 2);
  CHECK(result.summaries.size() == 2);
  CHECK(line_count(config.output_dir / "gof.csv") == 1 + 4 * 2 * 8);

  const auto manifest = slurp(config.output_dir / "manifest.json");
  CHECK(manifest.find(config.output_dir.string()) == std::string::npos);

  auto fresh = tiny("tdarep_test_harness_b");
  setenv("TDA_REPLICATE_THREADS", "3", 1);
  run_experiment(fresh);
  unsetenv("TDA_REPLICATE_THREADS");
  CHECK(slurp(fresh.output_dir / "manifest.json") == manifest);

  fs::remove(config.output_dir / "gof.csv");
  fs::remove(config.output_dir / "manifest.json");
  const auto rep_dir = config.output_dir / "replications" / "rep_001";
  fs::remove(rep_dir / "sim_modified_h0_g20_b2.csv");
  fs::remove(rep_dir / "fit_original_h0.json");
  for (const auto& entry : fs::directory_iterator(rep_dir)) {
    if (entry.path().filename().string().rfind("sim_original", 0) == 0) fs::remove(entry.path());
  }
  run_experiment(config);
  CHECK(slurp(config.output_dir / "manifest.json") == manifest);

  auto changed = config;
  changed.K = 2;
  CHECK_THROWS_AS(run_experiment(changed), ValidationError);

  const auto plot_dir = config.output_dir / "plots";
  const auto files = emit_plots(result, plot_dir);
  CHECK(fs::exists(plot_dir / "criterion1_bottleneck_h0.svg"));
  CHECK(fs::exists(plot_dir / "criterion1_wasserstein_h0.svg"));
  CHECK(fs::exists(plot_dir / "criterion2_h0_g10_b2.svg"));
  CHECK(line_count(plot_dir / "gof_long.csv") == line_count(config.output_dir / "gof.csv"));
  std::size_t measurements = 0;
  for (const auto& g : result.gof) measurements += g.rows.size() * (2 + 2 * g.options.orders.size());
  CHECK(line_count(plot_dir / "gof_long.csv") == 1 + measurements);

  auto thinned = result;
  for (auto& g : thinned.gof) {
    if (g.tags.grid_size == 20) g.rows.clear(), g.nn_sim.clear(), g.nn_real.clear();
  }
  const auto thin_dir = config.output_dir / "plots_thin";
  emit_plots(thinned, thin_dir);
  const auto plots = nlohmann::json::parse(slurp(thin_dir / "plots.json"));
  CHECK(plots.at("omitted_panels").size() >= 2);

  fs::remove_all(config.output_dir);
  fs::remove_all(fresh.output_dir);
}

TEST_CASE("mostly failing experiments are errors") {
  auto config = tiny("tdarep_test_harness_c");
  config.K = 60;  // more than the number of H0 points
  CHECK_THROWS_AS(run_experiment(config), FitFailure);
  const auto manifest = nlohmann::json::parse(slurp(config.output_dir / "manifest.json"));
  CHECK(manifest.at("failed") == 2);
  fs::remove_all(config.output_dir);
}
