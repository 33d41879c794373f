#include "tdarep/mcmc.hpp"

#include <algorithm>
#include <cstdio>

#include "tdarep/csv.hpp"
#include "tdarep/error.hpp"

namespace tdarep {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

std::vector<PpdPoint> gather(std::span<const PpdPoint> pts, const std::vector<std::size_t>& idx) {
  std::vector<PpdPoint> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pts[i]);
  return out;
}

std::string replicate_name(std::size_t b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replicate_%03zu.csv", b + 1);
  return buf;
}

}  // namespace

PpdPoint GridProposal::center(std::size_t cell) const {
  const std::size_t i = cell / grid_size;
  const std::size_t j = cell % grid_size;
  return {x1_min + (static_cast<double>(i) + 0.5) * width1, x2_min + (static_cast<double>(j) + 0.5) * width2};
}

std::optional<std::size_t> GridProposal::cell_of(PpdPoint x) const {
  const double u = (x.x1 - x1_min) / width1;
  const double v = (x.x2 - x2_min) / width2;
  const double g = static_cast<double>(grid_size);
  if (!(u >= 0.0 && u <= g && v >= 0.0 && v <= g)) return std::nullopt;
  const auto i = std::min(static_cast<std::size_t>(u), grid_size - 1);
  const auto j = std::min(static_cast<std::size_t>(v), grid_size - 1);
  return i * grid_size + j;
}

double GridProposal::density(PpdPoint x) const {
  const auto c = cell_of(x);
  return c ? probs[*c] / cell_area() : 0.0;
}

std::size_t GridProposal::retained() const {
  return static_cast<std::size_t>(std::count_if(probs.begin(), probs.end(), [](double p) { return p > 0.0; }));
}

GridProposal build_proposal(const QuadratureSpec& box, const Kde& kde, std::size_t grid_size, double cutoff) {
  if (grid_size < 2) throw InvalidArgument("proposal grid_size must be at least 2");
  if (!(cutoff >= 0.0)) throw InvalidArgument("proposal cutoff must be non-negative");
  if (kde.dim() != 2) throw InvalidArgument("proposal kde must be two-dimensional");
  if (!(box.x1_max > box.x1_min) || !(box.x2_max > box.x2_min) || box.x2_min < 0.0) {
    throw InvalidArgument("proposal box must be non-empty with x2_min >= 0");
  }
  GridProposal p;
  p.grid_size = grid_size;
  p.cutoff = cutoff;
  p.x1_min = box.x1_min;
  p.x2_min = box.x2_min;
  p.width1 = (box.x1_max - box.x1_min) / static_cast<double>(grid_size);
  p.width2 = (box.x2_max - box.x2_min) / static_cast<double>(grid_size);
  p.kde.resize(p.cells());
  p.probs.resize(p.cells());
  double total = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) {
    const auto x = p.center(c);
    p.kde[c] = kde(x.x1, x.x2);
    p.probs[c] = p.kde[c] >= cutoff ? p.kde[c] : 0.0;
    total += p.probs[c];
  }
  if (!(total > 0.0)) {
    throw EmptyProposal("every proposal cell has KDE below the cutoff " + csv::format_double(cutoff));
  }
  p.cdf.resize(p.cells());
  double running = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) {
    p.probs[c] /= total;
    running += p.probs[c];
    p.cdf[c] = running;
  }
  const auto last = static_cast<std::size_t>(
      std::find_if(p.probs.rbegin(), p.probs.rend(), [](double q) { return q > 0.0; }) - p.probs.rbegin());
  for (std::size_t c = p.cells() - last - 1; c < p.cells(); ++c) p.cdf[c] = 1.0;
  return p;
}

GridProposal build_proposal(const ProjectedDiagram& ppd, const Kde& kde, std::size_t grid_size, double cutoff) {
  return build_proposal(default_quadrature(ppd, kde), kde, grid_size, cutoff);
}

PpdPoint sample_proposal(const GridProposal& proposal, Rng& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(proposal.cdf.begin(), proposal.cdf.end(), u);
  const auto cell = static_cast<std::size_t>(it - proposal.cdf.begin());
  const std::size_t i = cell / proposal.grid_size;
  const std::size_t j = cell % proposal.grid_size;
  const double a = rng.uniform();
  const double b = rng.uniform();
  return {proposal.x1_min + (static_cast<double>(i) + a) * proposal.width1,
          proposal.x2_min + (static_cast<double>(j) + b) * proposal.width2};
}

double mh_acceptance(double log_f_current, double log_f_proposed, double q_current, double q_proposed,
                     bool* null_state) {
  if (null_state) *null_state = false;
  if (!(q_proposed > 0.0) || std::isnan(log_f_current) || log_f_current == kMinusInf) {
    if (null_state) *null_state = true;
    return 1.0;
  }
  if (!(q_current > 0.0) || std::isnan(log_f_proposed) || log_f_proposed == kMinusInf) return 0.0;
  const double log_ratio = log_f_proposed - log_f_current + std::log(q_current) - std::log(q_proposed);
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

double acceptance_prob(PpdPoint x, PpdPoint x_star, std::span<const PpdPoint> context, const ModelParams& params,
                       const GridProposal& proposal, const Kde& kde, const QuadratureSpec& quad,
                       NeighborMode mode) {
  const ConditionalDensity f(x, {context.begin(), context.end()}, params, kde, quad, mode);
  return mh_acceptance(f.log_density(x), f.log_density(x_star), proposal.density(x), proposal.density(x_star));
}

void McmcConfig::validate() const {
  if (grid_size < 2) throw ValidationError("grid_size must be at least 2");
  if (burn_in == 0) throw ValidationError("burn_in must be positive");
  if (replicates == 0) throw ValidationError("replicates must be positive");
  if (spacing && *spacing == 0) throw ValidationError("spacing must be positive");
  if (!(cutoff >= 0.0)) throw ValidationError("cutoff must be non-negative");
  if (forced_rho && !(*forced_rho >= 0.0 && *forced_rho <= 1.0)) {
    throw ValidationError("forced_rho must lie in [0, 1]");
  }
}

SweepResult mcmc_sweep(const ProjectedDiagram& ppd, const ModelParams& params, const GridProposal& proposal,
                       const Kde& kde, Rng& rng, NeighborMode mode, std::optional<double> forced_rho) {
  params.validate();
  const auto K = static_cast<std::size_t>(params.K);
  if (ppd.size() <= K) {
    throw InvalidArgument("sweep needs N > K (N = " + std::to_string(ppd.size()) + ", K = " +
                          std::to_string(K) + ")");
  }
  SweepResult out;
  out.ppd = ppd;
  auto& pts = out.ppd.points;
  auto draw = [&](Rng& r) { return sample_proposal(proposal, r); };
  auto q = [&](PpdPoint z) { return proposal.density(z); };
  for (std::size_t k = 0; k < pts.size(); ++k) {
    // The normalizer is shared by x_k and x*, so the ratio needs numerators only.
    const auto anchor = gather(pts, nearest_in(pts[k], pts, K, k));
    auto log_f = [&](PpdPoint z) {
      if (mode == NeighborMode::literal) return log_numerator(z, anchor, params, kde);
      return log_numerator(z, gather(pts, nearest_in(z, pts, K, k)), params, kde);
    };
    const auto step = mh_step(pts[k], log_f, draw, q, rng, forced_rho);
    ++out.proposals;
    if (step.accepted) ++out.accepted;
    if (step.null_state) ++out.null_states;
  }
  return out;
}

ReplicateResult replicate(const PersistenceDiagram& pd, const FittedModel& model, const McmcConfig& config) {
  config.validate();
  auto state = to_ppd(pd);
  if (state.size() != model.n_points) {
    throw InvalidArgument("diagram has " + std::to_string(state.size()) + " points but the model was fitted on " +
                          std::to_string(model.n_points));
  }
  const Kde kde = model_kde(model, state);
  auto proposal = build_proposal(model.quad, kde, config.grid_size, config.cutoff);
  Rng rng(config.seed);
  ReplicateResult out;
  out.retained_cells = proposal.retained();
  const std::size_t total = config.burn_in + (config.replicates - 1) * config.sweep_spacing();
  for (std::size_t s = 1; s <= total; ++s) {
    if (config.rebuild_proposal && s > 1) {
      proposal = build_proposal(model.quad, Kde(ppd_points(state), model.bandwidth), config.grid_size,
                                config.cutoff);
    }
    auto sweep = mcmc_sweep(state, model.params, proposal, kde, rng, model.neighbor_mode, config.forced_rho);
    state = std::move(sweep.ppd);
    out.acceptance_rates.push_back(sweep.acceptance_rate());
    out.null_states += sweep.null_states;
    if (s >= config.burn_in && (s - config.burn_in) % config.sweep_spacing() == 0) {
      auto rep = from_ppd(state);
      rep.convention = pd.convention;
      out.diagrams.push_back(std::move(rep));
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const McmcConfig& c) {
  j = {{"grid_size", c.grid_size},     {"burn_in", c.burn_in}, {"replicates", c.replicates},
       {"spacing", c.sweep_spacing()}, {"seed", c.seed},       {"cutoff", c.cutoff},
       {"rebuild_proposal", c.rebuild_proposal}};
}

void from_json(const nlohmann::json& j, McmcConfig& c) {
  c = McmcConfig{};
  c.grid_size = j.value("grid_size", c.grid_size);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.replicates = j.value("replicates", c.replicates);
  if (j.contains("spacing")) c.spacing = j.at("spacing").get<std::size_t>();
  c.seed = j.value("seed", c.seed);
  c.cutoff = j.value("cutoff", c.cutoff);
  c.rebuild_proposal = j.value("rebuild_proposal", c.rebuild_proposal);
  c.validate();
}

void save_replicates(const ReplicateResult& result, const McmcConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t b = 0; b < result.diagrams.size(); ++b) {
    save_diagram(result.diagrams[b], dir / replicate_name(b));
    files.push_back(replicate_name(b));
  }
  const nlohmann::json manifest = {{"config", config},
                                   {"replicates", files},
                                   {"acceptance_rates", result.acceptance_rates},
                                   {"null_states", result.null_states},
                                   {"retained_cells", result.retained_cells}};
  csv::write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<PersistenceDiagram> load_replicates(const std::filesystem::path& dir) {
  const auto lines = csv::read_lines(dir / "manifest.json");
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid replicate manifest: ") + e.what(), 1);
  }
  std::vector<PersistenceDiagram> out;
  for (const auto& name : manifest.at("replicates")) out.push_back(load_diagram(dir / name.get<std::string>()));
  return out;
}

}  // namespace tdarep
