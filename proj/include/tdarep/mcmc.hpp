#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "json.hpp"
#include "tdarep/fit.hpp"
#include "tdarep/random.hpp"

namespace tdarep {

inline constexpr double kProposalCutoff = 1e-4;

// KDE mass on a grid_size x grid_size lattice of cells over a PPD box.
// Cell (i, j) spans x1 in [x1_min + i*w1, x1_min + (i+1)*w1) and likewise
// for x2; cells are stored with j fastest.
struct GridProposal {
  double x1_min = 0.0;
  double x2_min = 0.0;
  double width1 = 1.0;
  double width2 = 1.0;
  std::size_t grid_size = 0;
  double cutoff = kProposalCutoff;
  std::vector<double> kde;    // raw KDE at each cell centre
  std::vector<double> probs;  // zero where kde < cutoff
  std::vector<double> cdf;

  std::size_t cells() const noexcept { return grid_size * grid_size; }
  double cell_area() const noexcept { return width1 * width2; }
  PpdPoint center(std::size_t cell) const;
  std::optional<std::size_t> cell_of(PpdPoint x) const;
  // q(x): cell mass over cell area; zero outside the grid.
  double density(PpdPoint x) const;
  std::size_t retained() const;
};

GridProposal build_proposal(const QuadratureSpec& box, const Kde& kde, std::size_t grid_size,
                            double cutoff = kProposalCutoff);

// Over the default quadrature box of the PPD.
GridProposal build_proposal(const ProjectedDiagram& ppd, const Kde& kde, std::size_t grid_size,
                            double cutoff = kProposalCutoff);

// Inverse CDF on one uniform, then a uniform position inside the cell.
PpdPoint sample_proposal(const GridProposal& proposal, Rng& rng);

// min{1, f(x*) q(x) / (f(x) q(x*))} from log target values and proposal
// densities. A vanishing denominator gives 1 and sets *null_state.
double mh_acceptance(double log_f_current, double log_f_proposed, double q_current, double q_proposed,
                     bool* null_state = nullptr);

struct MhStep {
  double rho = 0.0;
  bool accepted = false;
  bool null_state = false;
};

// One Metropolis-Hastings update of `state`. Draws the proposal first and one
// uniform for the decision afterwards, whatever rho turns out to be.
template <class State, class LogTarget, class Draw, class ProposalDensity>
MhStep mh_step(State& state, LogTarget&& log_f, Draw&& draw, ProposalDensity&& q, Rng& rng,
               std::optional<double> forced_rho = {}) {
  State candidate = draw(rng);
  MhStep step;
  if (forced_rho) {
    step.rho = *forced_rho;
  } else {
    step.rho = mh_acceptance(log_f(state), log_f(candidate), q(state), q(candidate), &step.null_state);
  }
  const double u = rng.uniform();
  if (u < step.rho) {
    state = candidate;
    step.accepted = true;
  }
  return step;
}

double acceptance_prob(PpdPoint x, PpdPoint x_star, std::span<const PpdPoint> context,
                       const ModelParams& params, const GridProposal& proposal, const Kde& kde,
                       const QuadratureSpec& quad, NeighborMode mode = NeighborMode::literal);

struct McmcConfig {
  std::size_t grid_size = 100;
  std::size_t burn_in = 25;
  std::size_t replicates = 1;
  std::optional<std::size_t> spacing;  // sweeps between replicates; burn_in if unset
  std::uint64_t seed = 0;
  double cutoff = kProposalCutoff;
  bool rebuild_proposal = false;  // refit the proposal to the current state before every sweep
  std::optional<double> forced_rho;  // test hook

  void validate() const;
  std::size_t sweep_spacing() const { return spacing.value_or(burn_in); }
};

struct SweepResult {
  ProjectedDiagram ppd;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t null_states = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

// Updates points in index order; later points see earlier replacements.
SweepResult mcmc_sweep(const ProjectedDiagram& ppd, const ModelParams& params, const GridProposal& proposal,
                       const Kde& kde, Rng& rng, NeighborMode mode = NeighborMode::literal,
                       std::optional<double> forced_rho = {});

struct ReplicateResult {
  std::vector<PersistenceDiagram> diagrams;
  std::vector<double> acceptance_rates;  // one per sweep
  std::size_t null_states = 0;
  std::size_t retained_cells = 0;
};

ReplicateResult replicate(const PersistenceDiagram& pd, const FittedModel& model, const McmcConfig& config);

void to_json(nlohmann::json& j, const McmcConfig& c);
void from_json(const nlohmann::json& j, McmcConfig& c);

// replicate_001.csv, ... plus manifest.json in `dir`.
void save_replicates(const ReplicateResult& result, const McmcConfig& config,
                     const std::filesystem::path& dir);
std::vector<PersistenceDiagram> load_replicates(const std::filesystem::path& dir);

}  // namespace tdarep
