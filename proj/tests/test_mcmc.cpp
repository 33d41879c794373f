#include <array>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "tdarep/cubical.hpp"
#include "tdarep/error.hpp"
#include "tdarep/mcmc.hpp"
#include "tdarep/synthetic.hpp"

using namespace tdarep;

namespace {

ProjectedDiagram random_ppd(Rng& rng, std::size_t n) {
  ProjectedDiagram ppd;
  for (std::size_t i = 0; i < n; ++i) ppd.points.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.4)});
  return ppd;
}

GridProposal uniform_proposal(double lo, double hi, std::size_t g) {
  GridProposal p;
  p.x1_min = lo;
  p.x2_min = 0.0;
  p.width1 = p.width2 = (hi - lo) / static_cast<double>(g);
  p.grid_size = g;
  p.kde.assign(g * g, 1.0);
  p.probs.assign(g * g, 1.0 / static_cast<double>(g * g));
  p.cdf.resize(g * g);
  for (std::size_t c = 0; c < g * g; ++c) p.cdf[c] = static_cast<double>(c + 1) / static_cast<double>(g * g);
  p.cdf.back() = 1.0;
  return p;
}

ModelParams params(Variant v, std::vector<double> theta, double alpha) {
  ModelParams p;
  p.variant = v;
  p.K = static_cast<int>(theta.size());
  p.theta = std::move(theta);
  p.alpha = alpha;
  return p;
}

PersistenceDiagram circle_h0(std::uint64_t seed) {
  const auto pc = sample_circle(300, 1.0, {0.0, 0.0}, seed);
  const auto field = kde_grid(fit_kde(pc, 0.1), bounding_box(pc), 50);
  return cubical_persistence(field, 1)[0];
}

}  // namespace

TEST_CASE("proposal respects the cutoff and normalizes") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto ppd = random_ppd(rng, 20);
    const auto kde = fit_ppd_kde(ppd);
    const auto p = build_proposal(ppd, kde, 25);
    double total = 0.0;
    for (std::size_t c = 0; c < p.cells(); ++c) {
      total += p.probs[c];
      if (p.probs[c] > 0.0) CHECK(p.kde[c] >= kProposalCutoff);
      else CHECK(p.kde[c] < kProposalCutoff);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(p.cdf.back() == 1.0);
  }
}

TEST_CASE("single tight kernel puts the mode in its own cell") {
  PointCloud one(2, {0.37, 0.21});
  const Kde kde(one, {0.01, 0.01});
  QuadratureSpec box{0.0, 1.0, 0.0, 1.0, 8, 8};
  const auto p = build_proposal(box, kde, 20);
  const auto best = static_cast<std::size_t>(std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin());
  CHECK(p.cell_of({0.37, 0.21}) == best);
  CHECK(p.probs[best] > 0.5);

  CHECK_THROWS_AS(build_proposal(box, kde, 20, 1e6), EmptyProposal);
  CHECK_THROWS_AS(build_proposal(box, kde, 1), InvalidArgument);
}

TEST_CASE("sampling follows the cell masses") {
  auto p = uniform_proposal(0.0, 1.0, 4);
  std::fill(p.probs.begin(), p.probs.end(), 0.0);
  p.probs[6] = 1.0;
  for (std::size_t c = 0; c < p.cells(); ++c) p.cdf[c] = c >= 6 ? 1.0 : 0.0;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(p.cell_of(sample_proposal(p, rng)) == std::size_t{6});

  Rng data(9);
  const auto ppd = random_ppd(data, 15);
  const auto q = build_proposal(ppd, fit_ppd_kde(ppd), 5);
  std::vector<double> counts(q.cells(), 0.0);
  const int draws = 100000;
  bool nonneg = true;
  for (int i = 0; i < draws; ++i) {
    const auto x = sample_proposal(q, rng);
    nonneg = nonneg && x.x2 >= 0.0;
    const auto c = q.cell_of(x);
    REQUIRE(c.has_value());
    counts[*c] += 1.0;
  }
  CHECK(nonneg);
  double worst = 0.0;
  for (std::size_t c = 0; c < q.cells(); ++c) worst = std::max(worst, std::abs(counts[c] / draws - q.probs[c]));
  CHECK(worst <= 0.01);
}

TEST_CASE("acceptance probability") {
  const std::vector<PpdPoint> context{{0.0, 0.0}, {10.0, 10.0}};
  const QuadratureSpec quad{-1.0, 12.0, 0.0, 12.0, 16, 16};
  const auto flat = uniform_proposal(-1.0, 12.0, 13);
  PointCloud dummy(2, {0.0, 0.0, 1.0, 1.0});
  const Kde kde(dummy, {1.0, 1.0});

  const auto zero = params(Variant::original, {0.0}, 0.0);
  CHECK(acceptance_prob({1.0, 0.5}, {1.0, 0.5}, context, zero, flat, kde, quad) == 1.0);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const PpdPoint x{rng.uniform(0.0, 11.0), rng.uniform(0.0, 11.0)};
    const PpdPoint y{rng.uniform(0.0, 11.0), rng.uniform(0.0, 11.0)};
    CHECK(acceptance_prob(x, y, context, zero, flat, kde, quad) == doctest::Approx(1.0).epsilon(1e-12));
  }

  // exp(-ln2 * (|x* - n| - |x - n|)) = 1/2 with n = (0, 0).
  const auto halving = params(Variant::original, {std::log(2.0)}, 0.0);
  CHECK(acceptance_prob({1.0, 0.0}, {2.0, 0.0}, context, halving, flat, kde, quad) ==
        doctest::Approx(0.5).epsilon(1e-12));

  auto skewed = flat;
  for (std::size_t c = 0; c < skewed.cells(); ++c) skewed.probs[c] = c % 2 ? 2.0 : 1.0;
  double s = 0.0;
  for (double v : skewed.probs) s += v;
  for (double& v : skewed.probs) v /= s;
  const PpdPoint x{1.2, 3.7};
  const PpdPoint y{4.6, 2.3};
  const ConditionalDensity f(x, context, halving, kde, quad);
  const double expected =
      std::min(1.0, f.density(y) * skewed.density(x) / (f.density(x) * skewed.density(y)));
  CHECK(acceptance_prob(x, y, context, halving, skewed, kde, quad) == doctest::Approx(expected).epsilon(1e-12));

  bool null_state = false;
  CHECK(mh_acceptance(0.0, 0.0, 1.0, 0.0, &null_state) == 1.0);
  CHECK(null_state);
  CHECK(mh_acceptance(-std::numeric_limits<double>::infinity(), 0.0, 1.0, 1.0, &null_state) == 1.0);
  CHECK(null_state);
  CHECK(mh_acceptance(0.0, 0.0, 0.0, 1.0, &null_state) == 0.0);
  CHECK_FALSE(null_state);
}

TEST_CASE("two-state chain reaches its stationary distribution") {
  const std::array<double, 2> target{1.0, 3.0};
  const std::array<double, 2> q{0.8, 0.2};
  Rng rng(2024);
  int state = 0;
  std::array<double, 2> visits{0.0, 0.0};
  const int steps = 100000;
  for (int t = 0; t < steps; ++t) {
    mh_step(
        state, [&](int s) { return std::log(target[static_cast<std::size_t>(s)]); },
        [&](Rng& r) { return r.uniform() < q[0] ? 0 : 1; }, [&](int s) { return q[static_cast<std::size_t>(s)]; },
        rng);
    visits[static_cast<std::size_t>(state)] += 1.0;
  }
  const double tv = 0.5 * (std::abs(visits[0] / steps - 0.25) + std::abs(visits[1] / steps - 0.75));
  CHECK(tv <= 0.02);
}

TEST_CASE("sweeps make one decision per point") {
  Rng data(17);
  const auto ppd = random_ppd(data, 12);
  const auto kde = fit_ppd_kde(ppd);
  const auto proposal = build_proposal(ppd, kde, 25);
  const auto p = params(Variant::modified, {2.0, -1.0, -1.0}, 0.5);

  Rng rng(1);
  const auto frozen = mcmc_sweep(ppd, p, proposal, kde, rng, NeighborMode::literal, 0.0);
  CHECK(frozen.proposals == ppd.size());
  CHECK(frozen.accepted == 0);
  CHECK(frozen.ppd == ppd);

  const auto moved = mcmc_sweep(ppd, p, proposal, kde, rng, NeighborMode::literal, 1.0);
  CHECK(moved.accepted == ppd.size());
  for (std::size_t i = 0; i < ppd.size(); ++i) CHECK_FALSE(moved.ppd.points[i] == ppd.points[i]);

  for (auto mode : {NeighborMode::literal, NeighborMode::renormalize}) {
    const auto sweep = mcmc_sweep(ppd, p, proposal, kde, rng, mode);
    CHECK(sweep.proposals == ppd.size());
    CHECK(sweep.ppd.size() == ppd.size());
  }

  const auto too_many = params(Variant::modified, std::vector<double>(12, 0.0), 0.5);
  CHECK_THROWS_AS(mcmc_sweep(ppd, too_many, proposal, kde, rng), InvalidArgument);
}

TEST_CASE("replicates from a fitted circle diagram") {
  const auto pd = circle_h0(21);
  const auto ppd = to_ppd(pd);
  FitConfig fc;
  fc.quadrature_nodes = 32;
  const auto model = fit_model(ppd, Variant::modified, 3, fc);

  McmcConfig config;
  config.grid_size = 100;
  config.burn_in = 25;
  config.replicates = 1;
  config.seed = 7;
  const auto one = replicate(pd, model, config);
  REQUIRE(one.diagrams.size() == 1);
  CHECK(one.acceptance_rates.size() == 25);
  double mean_rate = 0.0;
  for (double r : one.acceptance_rates) mean_rate += r;
  mean_rate /= static_cast<double>(one.acceptance_rates.size());
  CHECK(mean_rate > 0.05);
  CHECK(mean_rate < 0.6);

  config.grid_size = 25;
  config.replicates = 3;
  config.spacing = 5;
  const auto many = replicate(pd, model, config);
  REQUIRE(many.diagrams.size() == 3);
  CHECK(many.acceptance_rates.size() == 35);
  for (const auto& rep : many.diagrams) {
    CHECK(rep.pairs.size() == pd.pairs.size());
    CHECK(rep.rank == pd.rank);
    for (const auto& x : to_ppd(rep).points) {
      CHECK(x.x2 >= 0.0);
      CHECK(x.x1 >= model.quad.x1_min);
      CHECK(x.x1 <= model.quad.x1_max);
      CHECK(x.x2 <= model.quad.x2_max);
    }
  }
  const auto again = replicate(pd, model, config);
  for (std::size_t b = 0; b < 3; ++b) CHECK(again.diagrams[b].pairs == many.diagrams[b].pairs);

  config.rebuild_proposal = true;
  CHECK(replicate(pd, model, config).diagrams.size() == 3);

  const auto dir = std::filesystem::temp_directory_path() / "tdarep_test_mcmc";
  std::filesystem::remove_all(dir);
  save_replicates(many, config, dir);
  const auto back = load_replicates(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t b = 0; b < 3; ++b) CHECK(back[b].pairs == many.diagrams[b].pairs);
  std::filesystem::remove_all(dir);

  McmcConfig bad;
  bad.burn_in = 0;
  CHECK_THROWS_AS(replicate(pd, model, bad), ValidationError);
}

TEST_CASE("two-point sweeps sample the joint law of compatible conditionals") {
  // Original variant, alpha = 0, K = 1: f(x | y) ∝ exp(-theta |x - y|) is
  // symmetric, so alternating updates target p(x, y) ∝ exp(-theta |x - y|)
  // on the unit square squared.
  const double theta = 3.0;
  const auto flat = uniform_proposal(0.0, 1.0, 10);
  PointCloud dummy(2, {0.5, 0.5, 0.6, 0.4});
  const Kde kde(dummy, {1.0, 1.0});
  const auto p = params(Variant::original, {theta}, 0.0);

  Rng oracle_rng(77);
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double dx = oracle_rng.uniform() - oracle_rng.uniform();
    const double dy = oracle_rng.uniform() - oracle_rng.uniform();
    const double r = std::hypot(dx, dy);
    num += r * std::exp(-theta * r);
    den += std::exp(-theta * r);
  }
  const double expected = num / den;

  ProjectedDiagram state;
  state.points = {{0.2, 0.2}, {0.8, 0.8}};
  Rng rng(31);
  double total = 0.0;
  const int sweeps = 100000;
  for (int s = 0; s < sweeps; ++s) {
    state = mcmc_sweep(state, p, flat, kde, rng).ppd;
    total += std::hypot(state.points[0].x1 - state.points[1].x1, state.points[0].x2 - state.points[1].x2);
  }
  CHECK(total / sweeps == doctest::Approx(expected).epsilon(0.01));
}
