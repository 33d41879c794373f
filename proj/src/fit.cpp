#include "tdarep/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "tdarep/csv.hpp"
#include "tdarep/error.hpp"
#include "tdarep/optim.hpp"

namespace tdarep {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

ModelParams make_params(Variant variant, int K, std::span<const double> theta, double alpha) {
  ModelParams p;
  p.variant = variant;
  p.K = K;
  p.theta.assign(theta.begin(), theta.end());
  p.alpha = alpha;
  return p;
}

std::string format_alphas(const std::vector<double>& alphas, const std::vector<double>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (std::isfinite(values[i])) continue;
    out << (out.tellp() > 0 ? ", " : "") << alphas[i];
  }
  return out.str();
}

}  // namespace

FitProblem::FitProblem(const ProjectedDiagram& ppd, int K, const FitConfig& config)
    : FitProblem(ppd, K, fit_ppd_kde(ppd, config.bandwidth),
                 default_quadrature(ppd, fit_ppd_kde(ppd, config.bandwidth), config.quadrature_nodes),
                 config.neighbor_mode) {}

FitProblem::FitProblem(const ProjectedDiagram& ppd, int K, Kde kde, QuadratureSpec quad,
                       NeighborMode mode)
    : ppd_(ppd), K_(K), kde_(std::move(kde)), quad_(quad), mode_(mode),
      evaluator_(ppd_, kde_, quad_, K, mode) {}

std::vector<double> FitProblem::natural_step() const {
  const auto table = knn_distances(ppd_, K_);
  auto sums = table.column_sums();
  for (auto& s : sums) {
    const double mean = s / static_cast<double>(table.n);
    s = mean > 0.0 ? 1.0 / mean : 1.0;
  }
  return sums;
}

ThetaFit fit_theta(const FitProblem& problem, Variant variant, double alpha, const FitConfig& config,
                   std::optional<std::vector<double>> init) {
  const int K = problem.K();
  std::vector<double> start = init ? *init
                                   : config.theta_init ? *config.theta_init
                                                       : std::vector<double>(static_cast<std::size_t>(K), 0.0);
  if (start.size() != static_cast<std::size_t>(K)) throw InvalidArgument("theta_init must have K entries");

  auto objective = [&](std::span<const double> theta) {
    double value = kMinusInf;
    try {
      value = problem.evaluator()(make_params(variant, K, theta, alpha));
    } catch (const DegenerateNormalization&) {
      value = kMinusInf;
    }
    if (config.objective_hook) value = config.objective_hook(alpha, theta, value);
    return std::isfinite(value) ? value : kMinusInf;
  };

  ThetaFit fit;
  const double start_value = objective(start);
  if (!std::isfinite(start_value)) {
    throw FitFailure("log-pseudolikelihood is degenerate at the starting theta (alpha = " +
                     std::to_string(alpha) + ")", {alpha});
  }
  if (config.freeze_theta) {
    fit.theta = start;
    fit.logpl = start_value;
    fit.converged = true;
    return fit;
  }

  NelderMeadOptions options;
  options.tolerance = config.theta_tolerance;
  options.max_iterations = config.max_iterations;
  options.initial_step = config.initial_step ? *config.initial_step : problem.natural_step();
  const double limit = config.divergence_limit;
  const auto guard = [&](std::span<const double> best, double) {
    for (double t : best) {
      if (!(std::abs(t) <= limit)) {
        throw DivergingEstimate("theta search diverged: |theta|_inf exceeded " + std::to_string(limit) +
                                    " at alpha = " + std::to_string(alpha),
                                {alpha});
      }
    }
  };
  const auto result = nelder_mead_maximize(objective, start, options, guard);
  fit.theta = result.x;
  fit.logpl = result.value;
  fit.iterations = result.iterations;
  fit.converged = result.converged;
  return fit;
}

ThetaFit fit_theta(const ProjectedDiagram& ppd, Variant variant, int K, double alpha, const Kde& kde,
                   const QuadratureSpec& quad, const FitConfig& config,
                   std::optional<std::vector<double>> init) {
  const FitProblem problem(ppd, K, kde, quad, config.neighbor_mode);
  return fit_theta(problem, variant, alpha, config, std::move(init));
}

AlphaFit fit_alpha(const FitProblem& problem, Variant variant, AlphaRange range, const FitConfig& config) {
  const auto [lo, hi] = range;
  if (!(lo >= 0.0) || !(lo <= hi)) {
    throw InvalidArgument("alpha range must satisfy 0 <= lo <= hi");
  }

  std::vector<ThetaFit> fits;
  std::optional<std::size_t> best;
  auto profile = [&](double alpha) {
    std::optional<std::vector<double>> warm;
    if (best && config.alpha_search == AlphaSearch::profile) warm = fits[*best].theta;
    ThetaFit fit;
    fit.logpl = kMinusInf;
    try {
      if (config.alpha_search == AlphaSearch::profile) {
        fit = fit_theta(problem, variant, alpha, config, warm);
      } else {
        FitConfig frozen = config;
        frozen.freeze_theta = true;
        fit = fit_theta(problem, variant, alpha, frozen);
      }
    } catch (const FitFailure&) {
      fit.logpl = kMinusInf;
    }
    fits.push_back(fit);
    if (std::isfinite(fit.logpl) && (!best || fit.logpl > fits[*best].logpl)) best = fits.size() - 1;
    return fit.logpl;
  };

  const auto search = golden_section_maximize(profile, lo, hi, config.alpha_tolerance);
  AlphaFit out;
  out.probed_alphas = search.probes;
  out.probe_values = search.values;
  const bool degenerate = std::any_of(search.values.begin(), search.values.end(),
                                      [](double v) { return !std::isfinite(v); });
  if (degenerate || !best) {
    throw FitFailure("degenerate log-pseudolikelihood over alpha range [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "] at alpha = " + format_alphas(search.probes, search.values),
                     search.probes);
  }
  out.alpha = search.probes[*best];
  if (config.alpha_search == AlphaSearch::profile) {
    out.theta = fits[*best];
  } else {
    out.theta = fit_theta(problem, variant, out.alpha, config);
  }
  return out;
}

AlphaFit fit_alpha(const ProjectedDiagram& ppd, Variant variant, int K, AlphaRange range, const Kde& kde,
                   const QuadratureSpec& quad, const FitConfig& config) {
  const FitProblem problem(ppd, K, kde, quad, config.neighbor_mode);
  return fit_alpha(problem, variant, range, config);
}

double aic(double logpl, int K) { return 2.0 * (K + 1) - 2.0 * logpl; }

double bic(double logpl, int K, std::size_t n) {
  return (K + 1) * std::log(static_cast<double>(n)) - 2.0 * logpl;
}

FittedModel fit_model(const FitProblem& problem, Variant variant, const FitConfig& config) {
  FittedModel model;
  AlphaFit fit;
  model.alpha_range = config.alpha_range;
  try {
    fit = fit_alpha(problem, variant, config.alpha_range, config);
  } catch (const FitFailure& first) {
    if (!config.fallback_range) throw;
    try {
      fit = fit_alpha(problem, variant, *config.fallback_range, config);
    } catch (const FitFailure& second) {
      throw FitFailure(std::string("alpha search failed over both ranges: ") + first.what() + "; " +
                           second.what(),
                       second.probed_alphas());
    }
    model.alpha_range = *config.fallback_range;
    model.diagnostics.fallback_used = true;
    model.diagnostics.fallback_reason = first.what();
  }
  model.params = make_params(variant, problem.K(), fit.theta.theta, fit.alpha);
  model.logpl = fit.theta.logpl;
  model.n_points = problem.ppd().size();
  model.aic = aic(model.logpl, problem.K());
  model.bic = bic(model.logpl, problem.K(), model.n_points);
  model.bandwidth = problem.kde().bandwidth();
  model.quad = problem.quad();
  model.neighbor_mode = problem.neighbor_mode();
  model.diagnostics.probed_alphas = fit.probed_alphas;
  model.diagnostics.probe_values = fit.probe_values;
  model.diagnostics.theta_iterations = fit.theta.iterations;
  model.diagnostics.theta_converged = fit.theta.converged;
  return model;
}

FittedModel fit_model(const ProjectedDiagram& ppd, Variant variant, int K, const FitConfig& config) {
  const FitProblem problem(ppd, K, config);
  return fit_model(problem, variant, config);
}

std::size_t choose_by_bic(std::span<const FittedModel> models) {
  if (models.empty()) throw InvalidArgument("no models to choose from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < models.size(); ++i) {
    const auto& a = models[i];
    const auto& b = models[best];
    if (a.bic < b.bic || (a.bic == b.bic && a.params.K < b.params.K)) best = i;
  }
  return best;
}

FittedModel select_k(const ProjectedDiagram& ppd, Variant variant, std::span<const int> candidates,
                     const FitConfig& config) {
  if (candidates.empty()) throw InvalidArgument("select_k needs at least one candidate K");
  for (int K : candidates) {
    if (K < 1 || static_cast<std::size_t>(K) >= ppd.size()) {
      throw InvalidArgument("candidate K = " + std::to_string(K) + " must satisfy 1 <= K < N = " +
                            std::to_string(ppd.size()));
    }
  }
  std::vector<FittedModel> fitted;
  std::string failures;
  for (int K : candidates) {
    try {
      fitted.push_back(fit_model(ppd, variant, K, config));
    } catch (const FitFailure& e) {
      failures += "K = " + std::to_string(K) + ": " + e.what() + "\n";
    }
  }
  if (fitted.empty()) throw FitFailure("every candidate K failed:\n" + failures);
  return fitted[choose_by_bic(fitted)];
}

std::string sign_pattern(std::span<const double> theta) {
  std::string out;
  for (double t : theta) out += t > 0.0 ? '+' : (t < 0.0 ? '-' : '0');
  return out;
}

EstimateSummary summarize_estimates(std::span<const FittedModel> models) {
  if (models.empty()) throw InvalidArgument("summarize_estimates needs at least one model");
  EstimateSummary summary;
  summary.variant = models.front().params.variant;
  summary.K = models.front().params.K;
  std::map<std::string, EstimateRow> groups;
  for (const auto& m : models) {
    if (m.params.variant != summary.variant || m.params.K != summary.K) {
      throw InvalidArgument("summarize_estimates: models must share variant and K");
    }
    const auto key = sign_pattern(m.params.theta);
    auto [it, inserted] = groups.try_emplace(key);
    auto& row = it->second;
    if (inserted) {
      row.theta_signs = key;
      row.alpha_min = row.alpha_max = m.params.alpha;
    }
    row.alpha_min = std::min(row.alpha_min, m.params.alpha);
    row.alpha_max = std::max(row.alpha_max, m.params.alpha);
    ++row.count;
  }
  for (auto& [key, row] : groups) {
    row.percent = 100.0 * static_cast<double>(row.count) / static_cast<double>(models.size());
    summary.rows.push_back(row);
  }
  std::stable_sort(summary.rows.begin(), summary.rows.end(),
                   [](const EstimateRow& a, const EstimateRow& b) { return a.count > b.count; });
  return summary;
}

std::string summary_to_csv(const EstimateSummary& summary) {
  std::ostringstream out;
  out << "variant,K,theta_signs,alpha_min,alpha_max,percent_cases\n";
  for (const auto& row : summary.rows) {
    out << to_string(summary.variant) << ',' << summary.K << ',' << row.theta_signs << ','
        << csv::format_double(row.alpha_min) << ',' << csv::format_double(row.alpha_max) << ','
        << csv::format_double(row.percent) << '\n';
  }
  return out.str();
}

namespace {

nlohmann::json finite_or_null(const std::vector<double>& values) {
  auto arr = nlohmann::json::array();
  for (double v : values) arr.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  return arr;
}

std::vector<double> null_as_minus_inf(const nlohmann::json& arr) {
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(v.is_null() ? kMinusInf : v.get<double>());
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const ModelParams& p) {
  j = {{"variant", to_string(p.variant)}, {"K", p.K}, {"theta", p.theta}, {"alpha", p.alpha}};
}

void from_json(const nlohmann::json& j, ModelParams& p) {
  p.variant = variant_from_string(j.at("variant").get<std::string>());
  p.K = j.at("K").get<int>();
  p.theta = j.at("theta").get<std::vector<double>>();
  p.alpha = j.at("alpha").get<double>();
  p.validate();
}

void to_json(nlohmann::json& j, const QuadratureSpec& q) {
  j = {{"x1", {q.x1_min, q.x1_max}}, {"x2", {q.x2_min, q.x2_max}}, {"nodes", {q.nodes1, q.nodes2}}};
}

void from_json(const nlohmann::json& j, QuadratureSpec& q) {
  q.x1_min = j.at("x1").at(0).get<double>();
  q.x1_max = j.at("x1").at(1).get<double>();
  q.x2_min = j.at("x2").at(0).get<double>();
  q.x2_max = j.at("x2").at(1).get<double>();
  q.nodes1 = j.at("nodes").at(0).get<std::size_t>();
  q.nodes2 = j.at("nodes").at(1).get<std::size_t>();
  q.validate();
}

void to_json(nlohmann::json& j, const FittedModel& m) {
  j = {{"params", m.params},
       {"logpl", m.logpl},
       {"aic", m.aic},
       {"bic", m.bic},
       {"alpha_range", {m.alpha_range.first, m.alpha_range.second}},
       {"n_points", m.n_points},
       {"bandwidth", m.bandwidth},
       {"quadrature", m.quad},
       {"neighbor_mode", to_string(m.neighbor_mode)},
       {"diagnostics",
        {{"probed_alphas", m.diagnostics.probed_alphas},
         {"probe_values", finite_or_null(m.diagnostics.probe_values)},
         {"theta_iterations", m.diagnostics.theta_iterations},
         {"theta_converged", m.diagnostics.theta_converged},
         {"fallback_used", m.diagnostics.fallback_used},
         {"fallback_reason", m.diagnostics.fallback_reason}}}};
}

void from_json(const nlohmann::json& j, FittedModel& m) {
  m.params = j.at("params").get<ModelParams>();
  m.logpl = j.at("logpl").get<double>();
  m.aic = j.at("aic").get<double>();
  m.bic = j.at("bic").get<double>();
  m.alpha_range = {j.at("alpha_range").at(0).get<double>(), j.at("alpha_range").at(1).get<double>()};
  m.n_points = j.at("n_points").get<std::size_t>();
  m.bandwidth = j.at("bandwidth").get<std::vector<double>>();
  m.quad = j.at("quadrature").get<QuadratureSpec>();
  m.neighbor_mode = neighbor_mode_from_string(j.value("neighbor_mode", std::string("literal")));
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    m.diagnostics.probed_alphas = d.value("probed_alphas", std::vector<double>{});
    m.diagnostics.probe_values = null_as_minus_inf(d.value("probe_values", nlohmann::json::array()));
    m.diagnostics.theta_iterations = d.value("theta_iterations", 0);
    m.diagnostics.theta_converged = d.value("theta_converged", false);
    m.diagnostics.fallback_used = d.value("fallback_used", false);
    m.diagnostics.fallback_reason = d.value("fallback_reason", std::string());
  }
}

void to_json(nlohmann::json& j, const EstimateSummary& s) {
  auto rows = nlohmann::json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"theta_signs", r.theta_signs},
                    {"alpha_min", r.alpha_min},
                    {"alpha_max", r.alpha_max},
                    {"percent", r.percent},
                    {"count", r.count}});
  }
  j = {{"variant", to_string(s.variant)}, {"K", s.K}, {"rows", rows}};
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  csv::write_atomic(path, nlohmann::json(model).dump(2) + "\n");
}

FittedModel load_model(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  try {
    return nlohmann::json::parse(text).get<FittedModel>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid model JSON: ") + e.what(), 1);
  }
}

Kde model_kde(const FittedModel& model, const ProjectedDiagram& ppd) {
  return Kde(ppd_points(ppd), model.bandwidth);
}

}  // namespace tdarep
