#include "tdarep/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tdarep/csv.hpp"
#include "tdarep/cubical.hpp"
#include "tdarep/error.hpp"
#include "tdarep/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tdarep {

namespace {

std::string rep_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rep_%03zu", i);
  return buf;
}

std::string fit_file(Variant v, int rank) { return "fit_" + to_string(v) + "_h" + std::to_string(rank) + ".json"; }

std::string sim_stem(Variant v, int rank, std::size_t grid, std::size_t burn_in) {
  return "sim_" + to_string(v) + "_h" + std::to_string(rank) + "_g" + std::to_string(grid) + "_b" +
         std::to_string(burn_in);
}

std::size_t variant_index(Variant v) { return v == Variant::original ? 0 : 1; }

std::uint64_t mcmc_seed(std::uint64_t rep_seed, Variant v, int rank, std::size_t grid, std::size_t burn_in) {
  const auto stream = derive_seed(rep_seed, 0x100 + static_cast<std::uint64_t>(rank) * 2 + variant_index(v));
  return derive_seed(stream, grid * 100000 + burn_in);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 1);
  }
}

void write_json(const fs::path& path, const json& j) { csv::write_atomic(path, j.dump(2) + "\n"); }

json config_identity(const ExperimentConfig& c) {
  json j = c;
  j.erase("output_dir");
  return j;
}

Box padded_box(const PointCloud& pc, double padding) {
  auto box = bounding_box(pc);
  for (auto& [lo, hi] : box.ranges) {
    const double pad = padding * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return box;
}

std::vector<PersistenceDiagram> real_diagrams(const ExperimentConfig& config, std::uint64_t seed,
                                              const fs::path& dir) {
  // Cubical persistence always reports at least H0 and H1.
  const int max_rank = std::max(1, *std::max_element(config.homology_ranks.begin(), config.homology_ranks.end()));
  const auto pd_path = dir / "real_pd.csv";
  if (fs::exists(pd_path)) {
    const auto loaded = load_diagrams(pd_path);
    std::vector<PersistenceDiagram> out(static_cast<std::size_t>(max_rank + 1));
    for (int r = 0; r <= max_rank; ++r) out[static_cast<std::size_t>(r)].rank = r;
    for (const auto& pd : loaded) {
      if (pd.rank > max_rank) continue;
      out[static_cast<std::size_t>(pd.rank)] = pd;
    }
    return out;
  }

  PointCloud pc;
  const auto pc_path = dir / "points.csv";
  if (fs::exists(pc_path)) {
    pc = load_point_cloud(pc_path);
  } else {
    auto shape = config.shape;
    shape.seed = derive_seed(seed, 1);
    pc = sample_shape(shape);
    save_point_cloud(pc, pc_path);
  }
  ScalarField field;
  const auto field_path = dir / "field.csv";
  if (fs::exists(field_path)) {
    field = load_field(field_path);
  } else {
    field = kde_grid(fit_kde(pc, config.filtration_eta), padded_box(pc, config.padding), config.field_resolution);
    save_field(field, field_path);
  }
  auto pds = cubical_persistence(field, max_rank);
  save_diagrams(pds, pd_path);
  return pds;
}

FitRecord fit_stage(const ExperimentConfig& config, const PersistenceDiagram& pd, Variant v, int rank,
                    const fs::path& dir) {
  FitRecord rec;
  rec.variant = v;
  rec.rank = rank;
  const auto path = dir / fit_file(v, rank);
  if (fs::exists(path)) {
    const auto j = read_json(path);
    if (j.contains("error")) {
      rec.error = j.at("error").get<std::string>();
    } else {
      rec.model = j.get<FittedModel>();
    }
    return rec;
  }
  try {
    rec.model = fit_model(to_ppd(pd), v, config.K, config.fit);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  write_json(path, rec.model ? json(*rec.model) : json{{"error", rec.error}});
  return rec;
}

SimRecord sim_stage(const ExperimentConfig& config, const PersistenceDiagram& pd, const FittedModel& model,
                    std::uint64_t rep_seed, std::size_t grid, std::size_t burn_in, const fs::path& dir) {
  SimRecord rec;
  rec.variant = model.params.variant;
  rec.rank = pd.rank;
  rec.grid_size = grid;
  rec.burn_in = burn_in;
  rec.seed = mcmc_seed(rep_seed, rec.variant, rec.rank, grid, burn_in);
  const auto stem = sim_stem(rec.variant, rec.rank, grid, burn_in);
  const auto csv_path = dir / (stem + ".csv");
  const auto meta_path = dir / (stem + ".json");
  if (fs::exists(csv_path) && fs::exists(meta_path)) {
    rec.diagram = load_diagram(csv_path, pd.convention.direction);
    rec.diagram.rank = pd.rank;
    rec.mean_acceptance = read_json(meta_path).at("mean_acceptance").get<double>();
    return rec;
  }
  McmcConfig mc;
  mc.grid_size = grid;
  mc.burn_in = burn_in;
  mc.replicates = 1;
  mc.seed = rec.seed;
  mc.rebuild_proposal = config.rebuild_proposal;
  const auto result = replicate(pd, model, mc);
  rec.diagram = result.diagrams.front();
  double sum = 0.0;
  for (double r : result.acceptance_rates) sum += r;
  rec.mean_acceptance = sum / static_cast<double>(result.acceptance_rates.size());
  save_diagram(rec.diagram, csv_path);
  write_json(meta_path, {{"seed", rec.seed},
                         {"mean_acceptance", rec.mean_acceptance},
                         {"acceptance_rates", result.acceptance_rates},
                         {"null_states", result.null_states},
                         {"config", mc}});
  return rec;
}

ReplicationRecord run_replication(const ExperimentConfig& config, std::size_t index) {
  ReplicationRecord rec;
  rec.index = index;
  rec.seed = replication_seed(config.seed, index);
  const auto dir = config.output_dir / "replications" / rep_dir_name(index);
  try {
    fs::create_directories(dir);
    rec.real = real_diagrams(config, rec.seed, dir);
    for (int rank : config.homology_ranks) {
      const auto& pd = rec.real[static_cast<std::size_t>(rank)];
      for (auto v : config.variants) {
        auto fit = fit_stage(config, pd, v, rank, dir);
        if (fit.model) {
          for (auto grid : config.grid_sizes) {
            for (auto burn : config.burn_ins) {
              rec.sims.push_back(sim_stage(config, pd, *fit.model, rec.seed, grid, burn, dir));
            }
          }
        }
        rec.fits.push_back(std::move(fit));
      }
    }
    const bool any_fit = std::any_of(rec.fits.begin(), rec.fits.end(), [](const FitRecord& f) { return f.model; });
    rec.ok = any_fit;
    if (!any_fit) rec.error = "every fit failed";
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

json fit_record_json(const FitRecord& f) {
  json j = {{"variant", to_string(f.variant)}, {"rank", f.rank}, {"file", fit_file(f.variant, f.rank)}};
  if (!f.model) {
    j["error"] = f.error;
    return j;
  }
  const auto& m = *f.model;
  j["alpha"] = m.params.alpha;
  j["theta"] = m.params.theta;
  j["theta_signs"] = sign_pattern(m.params.theta);
  j["logpl"] = m.logpl;
  j["aic"] = m.aic;
  j["bic"] = m.bic;
  j["n_points"] = m.n_points;
  j["alpha_range"] = {m.alpha_range.first, m.alpha_range.second};
  j["fallback_used"] = m.diagnostics.fallback_used;
  return j;
}

}  // namespace

std::vector<int> default_ranks(const ShapeSpec& shape) {
  if (shape.kind != ShapeKind::sphere) return {0};
  if (shape.sphere_dim == 2) return {0, 1};
  return {0, 1, 2};
}

void ExperimentConfig::resolve() {
  if (homology_ranks.empty()) homology_ranks = default_ranks(shape);
  if (shape.kind == ShapeKind::sphere && shape.sphere_dim == 3) field_resolution = 15;
  validate();
}

void ExperimentConfig::validate() const {
  try {
    shape.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("shape: ") + e.what());
  }
  if (replications == 0) throw ValidationError("replications must be positive");
  if (!(filtration_eta > 0.0)) throw ValidationError("filtration_eta must be positive");
  if (field_resolution < 2) throw ValidationError("field_resolution must be at least 2");
  if (!(padding >= 0.0)) throw ValidationError("padding must be non-negative");
  if (K < 1) throw ValidationError("K must be positive");
  if (variants.empty()) throw ValidationError("variants must not be empty");
  if (grid_sizes.empty() || burn_ins.empty()) throw ValidationError("grid_sizes and burn_ins must not be empty");
  for (auto g : grid_sizes) {
    if (g < 2) throw ValidationError("grid sizes must be at least 2");
  }
  for (auto b : burn_ins) {
    if (b == 0) throw ValidationError("burn-ins must be positive");
  }
  const std::size_t dim = shape.kind == ShapeKind::sphere ? static_cast<std::size_t>(shape.sphere_dim) + 1 : 2;
  for (int r : homology_ranks) {
    if (r < 0 || static_cast<std::size_t>(r) >= dim) {
      throw ValidationError("homology rank " + std::to_string(r) + " is not available in dimension " +
                            std::to_string(dim));
    }
  }
  if (shape.kind == ShapeKind::sphere && shape.sphere_dim == 3 && field_resolution != 15) {
    throw ValidationError("S^3 experiments use field_resolution 15");
  }
  if (fit.alpha_range.first < 0.0 || !(fit.alpha_range.first < fit.alpha_range.second)) {
    throw ValidationError("alpha_range must satisfy 0 <= lo < hi");
  }
  if (!(gof.p >= 1.0)) throw ValidationError("gof.p must be at least 1");
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.name = "desk";
  c.shape.kind = ShapeKind::circle;
  c.shape.radii = {1.0};
  c.shape.fractions = {1.0};
  c.shape.n = 300;
  c.replications = 10;
  c.field_resolution = 50;
  c.grid_sizes = {25, 50, 100};
  c.burn_ins = {25, 50, 100};
  c.resolve();
  return c;
}

ExperimentConfig paper_preset() {
  ExperimentConfig c = desk_preset();
  c.name = "paper";
  c.shape.n = 1000;
  c.replications = 100;
  c.field_resolution = 100;
  c.resolve();
  return c;
}

void to_json(json& j, const ExperimentConfig& c) {
  json variants = json::array();
  for (auto v : c.variants) variants.push_back(to_string(v));
  json fit = {{"alpha_range", {c.fit.alpha_range.first, c.fit.alpha_range.second}},
              {"alpha_tolerance", c.fit.alpha_tolerance},
              {"theta_tolerance", c.fit.theta_tolerance},
              {"max_iterations", c.fit.max_iterations},
              {"divergence_limit", c.fit.divergence_limit},
              {"alpha_search", c.fit.alpha_search == AlphaSearch::profile ? "profile" : "single_pass"},
              {"neighbor_mode", to_string(c.fit.neighbor_mode)},
              {"quadrature_nodes", c.fit.quadrature_nodes}};
  fit["fallback_range"] = c.fit.fallback_range
                              ? json{c.fit.fallback_range->first, c.fit.fallback_range->second}
                              : json(nullptr);
  j = {{"name", c.name},
       {"shape",
        {{"kind", to_string(c.shape.kind)},
         {"radii", c.shape.radii},
         {"separation", c.shape.separation},
         {"fractions", c.shape.fractions},
         {"n", c.shape.n},
         {"sphere_dim", c.shape.sphere_dim}}},
       {"replications", c.replications},
       {"seed", c.seed},
       {"filtration_eta", c.filtration_eta},
       {"field_resolution", c.field_resolution},
       {"padding", c.padding},
       {"homology_ranks", c.homology_ranks},
       {"K", c.K},
       {"variants", variants},
       {"mcmc", {{"grid_sizes", c.grid_sizes}, {"burn_ins", c.burn_ins}, {"rebuild_proposal", c.rebuild_proposal}}},
       {"fit", fit},
       {"gof", {{"p", c.gof.p}, {"orders", c.gof.orders}, {"nn_space", to_string(c.gof.space)}}},
       {"output_dir", c.output_dir.string()}};
}

void from_json(const json& j, ExperimentConfig& c) {
  c = desk_preset();
  c.homology_ranks.clear();
  c.name = j.value("name", c.name);
  if (j.contains("shape")) {
    const auto& s = j.at("shape");
    if (s.contains("kind")) c.shape.kind = shape_kind_from_string(s.at("kind").get<std::string>());
    c.shape.radii = s.value("radii", c.shape.radii);
    c.shape.separation = s.value("separation", c.shape.separation);
    c.shape.fractions = s.value("fractions", c.shape.fractions);
    c.shape.n = s.value("n", c.shape.n);
    c.shape.sphere_dim = s.value("sphere_dim", c.shape.sphere_dim);
  }
  c.replications = j.value("replications", c.replications);
  c.seed = j.value("seed", c.seed);
  c.filtration_eta = j.value("filtration_eta", c.filtration_eta);
  c.field_resolution = j.value("field_resolution", c.field_resolution);
  c.padding = j.value("padding", c.padding);
  c.homology_ranks = j.value("homology_ranks", c.homology_ranks);
  c.K = j.value("K", c.K);
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j.at("variants")) c.variants.push_back(variant_from_string(v.get<std::string>()));
  }
  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    c.grid_sizes = m.value("grid_sizes", c.grid_sizes);
    c.burn_ins = m.value("burn_ins", c.burn_ins);
    c.rebuild_proposal = m.value("rebuild_proposal", c.rebuild_proposal);
  }
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    if (f.contains("alpha_range")) {
      c.fit.alpha_range = {f.at("alpha_range").at(0).get<double>(), f.at("alpha_range").at(1).get<double>()};
    }
    if (f.contains("fallback_range")) {
      const auto& fb = f.at("fallback_range");
      if (fb.is_null()) {
        c.fit.fallback_range.reset();
      } else {
        c.fit.fallback_range = AlphaRange{fb.at(0).get<double>(), fb.at(1).get<double>()};
      }
    }
    c.fit.alpha_tolerance = f.value("alpha_tolerance", c.fit.alpha_tolerance);
    c.fit.theta_tolerance = f.value("theta_tolerance", c.fit.theta_tolerance);
    c.fit.max_iterations = f.value("max_iterations", c.fit.max_iterations);
    c.fit.divergence_limit = f.value("divergence_limit", c.fit.divergence_limit);
    if (f.contains("alpha_search")) {
      const auto s = f.at("alpha_search").get<std::string>();
      if (s == "profile") {
        c.fit.alpha_search = AlphaSearch::profile;
      } else if (s == "single_pass") {
        c.fit.alpha_search = AlphaSearch::single_pass;
      } else {
        throw ValidationError("unknown alpha_search '" + s + "'");
      }
    }
    if (f.contains("neighbor_mode")) {
      c.fit.neighbor_mode = neighbor_mode_from_string(f.at("neighbor_mode").get<std::string>());
    }
    c.fit.quadrature_nodes = f.value("quadrature_nodes", c.fit.quadrature_nodes);
  }
  if (j.contains("gof")) {
    const auto& g = j.at("gof");
    c.gof.p = g.value("p", c.gof.p);
    c.gof.orders = g.value("orders", c.gof.orders);
    if (g.contains("nn_space")) c.gof.space = nn_space_from_string(g.at("nn_space").get<std::string>());
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  const auto j = read_json(path);
  ExperimentConfig c;
  try {
    c = j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  c.resolve();
  return c;
}

const PersistenceDiagram* ReplicationRecord::real_rank(int rank) const {
  if (rank < 0 || static_cast<std::size_t>(rank) >= real.size()) return nullptr;
  return &real[static_cast<std::size_t>(rank)];
}

const FitRecord* ReplicationRecord::fit(Variant variant, int rank) const {
  for (const auto& f : fits) {
    if (f.variant == variant && f.rank == rank) return &f;
  }
  return nullptr;
}

const SimRecord* ReplicationRecord::sim(Variant variant, int rank, std::size_t grid, std::size_t burn_in) const {
  for (const auto& s : sims) {
    if (s.variant == variant && s.rank == rank && s.grid_size == grid && s.burn_in == burn_in) return &s;
  }
  return nullptr;
}

std::size_t ExperimentResult::failed() const {
  return static_cast<std::size_t>(
      std::count_if(replications.begin(), replications.end(), [](const ReplicationRecord& r) { return !r.ok; }));
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t i) { return derive_seed(master, i); }

ExperimentResult run_experiment(ExperimentConfig config) {
  config.resolve();
  fs::create_directories(config.output_dir);
  const auto config_path = config.output_dir / "config.json";
  if (fs::exists(config_path)) {
    if (read_json(config_path) != config_identity(config)) {
      throw ValidationError(config.output_dir.string() + " holds artifacts of a different experiment");
    }
  } else {
    write_json(config_path, config_identity(config));
  }

  ExperimentResult result;
  result.config = config;
  result.replications.resize(config.replications);
  parallel_for(config.replications, [&](std::size_t i) { result.replications[i] = run_replication(config, i); });

  for (int rank : config.homology_ranks) {
    for (auto v : config.variants) {
      for (auto grid : config.grid_sizes) {
        for (auto burn : config.burn_ins) {
          std::vector<PersistenceDiagram> real, sim;
          std::vector<std::size_t> index;
          for (const auto& rep : result.replications) {
            const auto* s = rep.sim(v, rank, grid, burn);
            if (!s) continue;
            real.push_back(*rep.real_rank(rank));
            sim.push_back(s->diagram);
            index.push_back(rep.index);
          }
          auto report = gof_report(real, sim, {to_string(v), grid, burn, rank}, config.gof);
          for (std::size_t k = 0; k < index.size(); ++k) report.rows[k].replicate = index[k];
          result.gof.push_back(std::move(report));
        }
      }
      std::vector<FittedModel> models;
      for (const auto& rep : result.replications) {
        const auto* f = rep.fit(v, rank);
        if (f && f->model) models.push_back(*f->model);
      }
      if (!models.empty()) result.summaries.push_back({rank, summarize_estimates(models)});
    }
  }

  std::string gof_csv = gof_csv_header();
  for (const auto& r : result.gof) gof_csv += gof_to_csv_rows(r);
  csv::write_atomic(config.output_dir / "gof.csv", gof_csv);
  std::string est_csv = "rank,variant,K,theta_signs,alpha_min,alpha_max,percent_cases\n";
  for (const auto& s : result.summaries) {
    const auto body = summary_to_csv(s.summary);
    std::istringstream lines(body.substr(body.find('\n') + 1));
    for (std::string line; std::getline(lines, line);) est_csv += std::to_string(s.rank) + "," + line + "\n";
  }
  csv::write_atomic(config.output_dir / "estimates.csv", est_csv);
  write_json(config.output_dir / "manifest.json", result_manifest(result));

  if (2 * result.failed() > config.replications) {
    std::string reasons;
    for (const auto& rep : result.replications) {
      if (!rep.ok) reasons += "\n  replication " + std::to_string(rep.index) + ": " + rep.error;
    }
    throw FitFailure(std::to_string(result.failed()) + " of " + std::to_string(config.replications) +
                     " replications failed:" + reasons);
  }
  return result;
}

json result_manifest(const ExperimentResult& result) {
  json reps = json::array();
  for (const auto& rep : result.replications) {
    json real = json::object();
    for (const auto& pd : rep.real) real["h" + std::to_string(pd.rank)] = pd.pairs.size();
    json fits = json::array();
    for (const auto& f : rep.fits) fits.push_back(fit_record_json(f));
    json sims = json::array();
    for (const auto& s : rep.sims) {
      sims.push_back({{"variant", to_string(s.variant)},
                      {"rank", s.rank},
                      {"grid_size", s.grid_size},
                      {"burn_in", s.burn_in},
                      {"seed", s.seed},
                      {"file", sim_stem(s.variant, s.rank, s.grid_size, s.burn_in) + ".csv"},
                      {"points", s.diagram.pairs.size()},
                      {"mean_acceptance", s.mean_acceptance}});
    }
    reps.push_back({{"index", rep.index},
                    {"seed", rep.seed},
                    {"dir", "replications/" + rep_dir_name(rep.index)},
                    {"ok", rep.ok},
                    {"error", rep.error},
                    {"real_points", real},
                    {"fits", fits},
                    {"sims", sims}});
  }
  json gof = json::array();
  for (const auto& r : result.gof) gof.push_back(r);
  json summaries = json::array();
  for (const auto& s : result.summaries) {
    json sj = s.summary;
    sj["rank"] = s.rank;
    summaries.push_back(sj);
  }
  return {{"config", config_identity(result.config)},
          {"replications", reps},
          {"failed", result.failed()},
          {"gof", gof},
          {"estimates", summaries}};
}

}  // namespace tdarep
