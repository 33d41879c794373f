#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdarep/fit.hpp"
#include "tdarep/gof.hpp"
#include "tdarep/mcmc.hpp"
#include "tdarep/synthetic.hpp"

namespace tdarep {

struct ExperimentConfig {
  std::string name = "desk";
  ShapeSpec shape;
  std::size_t replications = 10;
  std::uint64_t seed = 42;
  double filtration_eta = 0.1;
  std::size_t field_resolution = 50;
  double padding = 0.0;  // fraction of each coordinate range added on both sides
  std::vector<int> homology_ranks;  // per-shape default when empty
  int K = 3;
  std::vector<Variant> variants{Variant::original, Variant::modified};
  std::vector<std::size_t> grid_sizes{50};
  std::vector<std::size_t> burn_ins{25};
  bool rebuild_proposal = false;
  FitConfig fit;
  GofOptions gof;
  std::filesystem::path output_dir = "tda-replicate-out";

  // Fills per-shape defaults (ranks, the S^3 resolution) and checks consistency.
  void resolve();
  void validate() const;
};

// circles: H0; S^2: H0, H1; S^3: H0, H1, H2.
std::vector<int> default_ranks(const ShapeSpec& shape);

ExperimentConfig desk_preset();
ExperimentConfig paper_preset();

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Missing keys keep the desk preset values.
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct FitRecord {
  Variant variant = Variant::modified;
  int rank = 0;
  std::optional<FittedModel> model;
  std::string error;
};

struct SimRecord {
  Variant variant = Variant::modified;
  int rank = 0;
  std::size_t grid_size = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  PersistenceDiagram diagram;
  double mean_acceptance = 0.0;
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<PersistenceDiagram> real;  // one per rank 0..max rank
  std::vector<FitRecord> fits;
  std::vector<SimRecord> sims;

  const PersistenceDiagram* real_rank(int rank) const;
  const FitRecord* fit(Variant variant, int rank) const;
  const SimRecord* sim(Variant variant, int rank, std::size_t grid, std::size_t burn_in) const;
};

struct RankedSummary {
  int rank = 0;
  EstimateSummary summary;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationRecord> replications;
  std::vector<GofReport> gof;  // one per (rank, variant, grid, burn-in)
  std::vector<RankedSummary> summaries;  // one per (rank, variant) with at least one fit

  std::size_t failed() const;
};

// Seed of replication i.
std::uint64_t replication_seed(std::uint64_t master, std::size_t i);

// Runs or resumes an experiment in config.output_dir. Artifacts already on
// disk are loaded instead of recomputed.
ExperimentResult run_experiment(ExperimentConfig config);

// The result manifest: deterministic, relative paths only.
nlohmann::json result_manifest(const ExperimentResult& result);

// Box-plot SVGs and their CSVs under `dir`; returns the files written.
std::vector<std::filesystem::path> emit_plots(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace tdarep
