#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tdarep/gibbs_model.hpp"

namespace tdarep {

// profile:     alpha maximizes max_theta logPL(alpha, theta).
// single_pass: alpha maximizes logPL(alpha, theta_init), then theta is fitted once.
enum class AlphaSearch { profile, single_pass };

using AlphaRange = std::pair<double, double>;

struct FitConfig {
  AlphaRange alpha_range{0.0, 4.0};
  std::optional<AlphaRange> fallback_range = AlphaRange{0.0, 1.0};
  double alpha_tolerance = 1e-3;
  double theta_tolerance = 1e-6;
  int max_iterations = 500;
  double divergence_limit = 1e3;
  AlphaSearch alpha_search = AlphaSearch::profile;
  NeighborMode neighbor_mode = NeighborMode::literal;
  std::size_t quadrature_nodes = 64;
  std::optional<std::vector<double>> bandwidth;  // PPD kde; plug-in surrogate if unset
  std::optional<std::vector<double>> theta_init;  // zeros if unset
  // Initial simplex offsets; defaults to 1 / mean k-th nearest-neighbour distance.
  std::optional<std::vector<double>> initial_step;

  // Test hooks. `objective_hook` replaces the objective seen by both searches
  // with hook(alpha, theta, logPL); `freeze_theta` skips the theta search.
  std::function<double(double, std::span<const double>, double)> objective_hook;
  bool freeze_theta = false;
};

struct ThetaFit {
  std::vector<double> theta;
  double logpl = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct AlphaFit {
  double alpha = 0.0;
  ThetaFit theta;
  std::vector<double> probed_alphas;
  std::vector<double> probe_values;  // -inf marks a failed probe
};

struct FitDiagnostics {
  std::vector<double> probed_alphas;
  std::vector<double> probe_values;
  int theta_iterations = 0;
  bool theta_converged = false;
  bool fallback_used = false;
  std::string fallback_reason;
};

struct FittedModel {
  ModelParams params;
  double logpl = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  AlphaRange alpha_range{0.0, 4.0};
  std::size_t n_points = 0;
  std::vector<double> bandwidth;
  QuadratureSpec quad;
  NeighborMode neighbor_mode = NeighborMode::literal;
  FitDiagnostics diagnostics;
};

// Everything a fit needs about one diagram, computed once.
class FitProblem {
 public:
  FitProblem(const ProjectedDiagram& ppd, int K, const FitConfig& config);
  FitProblem(const ProjectedDiagram& ppd, int K, Kde kde, QuadratureSpec quad, NeighborMode mode);
  FitProblem(const FitProblem&) = delete;
  FitProblem& operator=(const FitProblem&) = delete;

  const ProjectedDiagram& ppd() const noexcept { return ppd_; }
  const Kde& kde() const noexcept { return kde_; }
  const QuadratureSpec& quad() const noexcept { return quad_; }
  const PseudolikelihoodEvaluator& evaluator() const noexcept { return evaluator_; }
  int K() const noexcept { return K_; }
  NeighborMode neighbor_mode() const noexcept { return mode_; }
  // 1 / mean k-th nearest-neighbour distance, per k.
  std::vector<double> natural_step() const;

 private:
  ProjectedDiagram ppd_;
  int K_;
  Kde kde_;
  QuadratureSpec quad_;
  NeighborMode mode_;
  PseudolikelihoodEvaluator evaluator_;
};

// Nelder-Mead maximization of logPL over theta with alpha fixed. Throws
// DivergingEstimate if the best vertex leaves |theta|_inf <= limit and
// FitFailure if logPL is degenerate at the start.
ThetaFit fit_theta(const FitProblem& problem, Variant variant, double alpha, const FitConfig& config,
                   std::optional<std::vector<double>> init = {});

ThetaFit fit_theta(const ProjectedDiagram& ppd, Variant variant, int K, double alpha, const Kde& kde,
                   const QuadratureSpec& quad, const FitConfig& config = {},
                   std::optional<std::vector<double>> init = {});

// Golden-section search over `range`. Throws FitFailure carrying every probed
// alpha if any probe has a degenerate likelihood.
AlphaFit fit_alpha(const FitProblem& problem, Variant variant, AlphaRange range, const FitConfig& config);

AlphaFit fit_alpha(const ProjectedDiagram& ppd, Variant variant, int K, AlphaRange range, const Kde& kde,
                   const QuadratureSpec& quad, const FitConfig& config = {});

// Fits alpha and theta over config.alpha_range, retrying over the fallback
// range when the first search is degenerate.
FittedModel fit_model(const ProjectedDiagram& ppd, Variant variant, int K, const FitConfig& config = {});
FittedModel fit_model(const FitProblem& problem, Variant variant, const FitConfig& config = {});

double aic(double logpl, int K);
double bic(double logpl, int K, std::size_t n);

// Index of the smallest BIC; ties go to the smaller K.
std::size_t choose_by_bic(std::span<const FittedModel> models);

FittedModel select_k(const ProjectedDiagram& ppd, Variant variant, std::span<const int> candidates,
                     const FitConfig& config = {});

struct EstimateRow {
  std::string theta_signs;  // one of '+', '-', '0' per theta
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double percent = 0.0;
  std::size_t count = 0;
};

struct EstimateSummary {
  Variant variant = Variant::modified;
  int K = 3;
  std::vector<EstimateRow> rows;  // most frequent pattern first
};

std::string sign_pattern(std::span<const double> theta);
EstimateSummary summarize_estimates(std::span<const FittedModel> models);
std::string summary_to_csv(const EstimateSummary& summary);

void to_json(nlohmann::json& j, const ModelParams& p);
void from_json(const nlohmann::json& j, ModelParams& p);
void to_json(nlohmann::json& j, const QuadratureSpec& q);
void from_json(const nlohmann::json& j, QuadratureSpec& q);
void to_json(nlohmann::json& j, const FittedModel& m);
void from_json(const nlohmann::json& j, FittedModel& m);
void to_json(nlohmann::json& j, const EstimateSummary& s);

void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

// Rebuilds the model kde over the PPD the model was fitted on.
Kde model_kde(const FittedModel& model, const ProjectedDiagram& ppd);

}  // namespace tdarep
