#include <cmath>

#include "doctest.h"
#include "oracles/gibbs_oracle.hpp"
#include "tdarep/error.hpp"
#include "tdarep/gibbs_model.hpp"
#include "tdarep/random.hpp"

using namespace tdarep;

namespace {

ProjectedDiagram random_ppd(Rng& rng, std::size_t n) {
  ProjectedDiagram ppd;
  for (std::size_t i = 0; i < n; ++i) ppd.points.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.4)});
  return ppd;
}

ModelParams params(Variant v, std::vector<double> theta, double alpha) {
  ModelParams p;
  p.variant = v;
  p.K = static_cast<int>(theta.size());
  p.theta = std::move(theta);
  p.alpha = alpha;
  return p;
}

std::vector<PpdPoint> without(const std::vector<PpdPoint>& pts, std::size_t i) {
  std::vector<PpdPoint> out;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (j != i) out.push_back(pts[j]);
  }
  return out;
}

}  // namespace

TEST_CASE("knn distances on a collinear triple") {
  ProjectedDiagram ppd;
  ppd.points = {{0, 0}, {1, 0}, {3, 0}};
  const auto t = knn_distances(ppd, 2);
  CHECK(t.at(0, 0) == 1.0);
  CHECK(t.at(0, 1) == 3.0);
  CHECK(t.at(1, 0) == 1.0);
  CHECK(t.at(1, 1) == 2.0);
  CHECK(t.at(2, 0) == 2.0);
  CHECK(t.at(2, 1) == 3.0);
  CHECK(t.column_sums() == std::vector<double>{4.0, 8.0});
  try {
    knn_distances(ppd, 3);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("N = 3") != std::string::npos);
    CHECK(msg.find("K = 3") != std::string::npos);
  }
}

TEST_CASE("knn rows match brute-force enumeration and are sorted") {
  Rng rng(4);
  const auto ppd = random_ppd(rng, 40);
  const auto t = knn_distances(ppd, 5);
  for (std::size_t i = 0; i < ppd.size(); ++i) {
    std::vector<double> all;
    for (std::size_t j = 0; j < ppd.size(); ++j) {
      if (j != i) all.push_back(std::hypot(ppd.points[i].x1 - ppd.points[j].x1, ppd.points[i].x2 - ppd.points[j].x2));
    }
    std::sort(all.begin(), all.end());
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(t.at(i, k) == doctest::Approx(all[k]).epsilon(1e-15));
      if (k > 0) CHECK(t.at(i, k) >= t.at(i, k - 1));
    }
  }

  ProjectedDiagram twin;
  twin.points = {{0.5, 0.5}, {0.5, 0.5}, {10, 10}};
  const auto tt = knn_distances(twin, 1);
  CHECK(tt.at(0, 0) == 0.0);
  CHECK(tt.at(1, 0) == 0.0);
}

TEST_CASE("knn distances are translation invariant") {
  Rng rng(10);
  ProjectedDiagram ppd;
  for (int i = 0; i < 25; ++i) {
    ppd.points.push_back({static_cast<double>(rng.next_u64() % 512) / 1024.0,
                          static_cast<double>(rng.next_u64() % 512) / 1024.0});
  }
  auto moved = ppd;
  for (auto& x : moved.points) {
    x.x1 += 3.0;
    x.x2 += 2.0;
  }
  CHECK(knn_distances(ppd, 3).distance == knn_distances(moved, 3).distance);
}

TEST_CASE("local energy") {
  const Kde kde(PointCloud(2, {0.0, 0.0, 1.0, 1.0}), {0.5, 0.5});
  const std::vector<PpdPoint> nb = {{1.0, 0.0}, {0.0, 3.0}};
  const PpdPoint x{0.0, 0.0};
  for (auto v : {Variant::original, Variant::modified}) {
    CHECK(local_energy(x, nb, params(v, {0.0, 0.0}, 1.3), kde) == 0.0);
  }
  CHECK(local_energy(x, nb, params(Variant::original, {1.0, 1.0}, 0.7), kde) == 4.0);
  CHECK(local_energy(x, nb, params(Variant::modified, {1.0, 1.0}, 0.0), kde) == 4.0);
  const double scale = std::pow(kde(0.0, 0.0), 2.0);
  CHECK(local_energy(x, nb, params(Variant::modified, {1.0, 1.0}, 2.0), kde) ==
        doctest::Approx(4.0 * scale).epsilon(1e-12));
}

TEST_CASE("uniform case of the conditional density") {
  Rng rng(2);
  const auto ppd = random_ppd(rng, 12);
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde);
  for (auto v : {Variant::original, Variant::modified}) {
    const auto p = params(v, {0.0, 0.0, 0.0}, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      const double f = conditional_density(ppd.points[i], without(ppd.points, i), p, kde, quad);
      CHECK(f == doctest::Approx(1.0 / quad.area()).epsilon(1e-12));
    }
    CHECK(log_pseudolikelihood(ppd, p, kde, quad) ==
          doctest::Approx(12.0 * std::log(1.0 / quad.area())).epsilon(1e-12));
  }
}

TEST_CASE("conditional density normalizes") {
  Rng rng(8);
  const auto ppd = random_ppd(rng, 15);
  const Kde kde = fit_ppd_kde(ppd);
  auto quad = default_quadrature(ppd, kde);
  for (auto v : {Variant::original, Variant::modified}) {
    const auto p = params(v, {6.0, -2.0, 1.0}, 0.8);
    const ConditionalDensity f(ppd.points[3], without(ppd.points, 3), p, kde, quad);

    // Same nodes as the normalizer: exact up to rounding.
    double own = 0.0;
    const double h1 = (quad.x1_max - quad.x1_min) / 63.0, h2 = (quad.x2_max - quad.x2_min) / 63.0;
    for (int a = 0; a < 64; ++a) {
      for (int b = 0; b < 64; ++b) {
        const double w = ((a == 0 || a == 63) ? 0.5 : 1.0) * ((b == 0 || b == 63) ? 0.5 : 1.0) * h1 * h2;
        const double z1 = a == 63 ? quad.x1_max : quad.x1_min + h1 * a;
        const double z2 = b == 63 ? quad.x2_max : quad.x2_min + h2 * b;
        own += w * f.density({z1, z2});
      }
    }
    CHECK(std::abs(own - 1.0) < 1e-12);

    // A finer independent grid.
    const int n = 257;
    const double g1 = (quad.x1_max - quad.x1_min) / (n - 1), g2 = (quad.x2_max - quad.x2_min) / (n - 1);
    double fine = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double w = ((a == 0 || a == n - 1) ? 0.5 : 1.0) * ((b == 0 || b == n - 1) ? 0.5 : 1.0);
        fine += w * f.density({quad.x1_min + g1 * a, quad.x2_min + g2 * b});
      }
    }
    CHECK(std::abs(fine * g1 * g2 - 1.0) < 2e-2);
  }
}

TEST_CASE("density ratio with a shared neighbour set") {
  // Both evaluation points have the same two nearest context points, so the
  // normalizer cancels: f(d1 = 0.1) / f(d1 = 0.2) = exp(5 * 0.1).
  const std::vector<PpdPoint> context = {{0.0, 0.0}, {5.0, 5.0}};
  ProjectedDiagram ppd;
  ppd.points = {{0.0, 0.0}, {5.0, 5.0}, {0.1, 0.0}, {0.0, 0.2}};
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde);
  const auto p = params(Variant::original, {5.0, 0.0}, 0.0);
  const double near = conditional_density({0.1, 0.0}, context, p, kde, quad);
  const double far = conditional_density({0.0, 0.2}, context, p, kde, quad);
  CHECK(near / far == doctest::Approx(std::exp(0.5)).epsilon(1e-12));
  CHECK(near / far == doctest::Approx(1.6487212707001282).epsilon(1e-12));
}

TEST_CASE("variants agree when alpha is zero") {
  Rng rng(31);
  const auto ppd = random_ppd(rng, 20);
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> theta = {rng.uniform(-5, 10), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const std::size_t i = rng.next_u64() % ppd.size();
    const auto ctx = without(ppd.points, i);
    const double a = conditional_density(ppd.points[i], ctx, params(Variant::original, theta, 0.0), kde, quad);
    const double b = conditional_density(ppd.points[i], ctx, params(Variant::modified, theta, 0.0), kde, quad);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("evaluator matches per-point densities and the direct oracle") {
  Rng rng(12);
  const auto ppd = random_ppd(rng, 18);
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde, 32);
  for (auto v : {Variant::original, Variant::modified}) {
    const auto p = params(v, {8.0, -3.0, 0.5}, 1.2);
    const PseudolikelihoodEvaluator eval(ppd, kde, quad, 3);
    double sum = 0.0;
    for (std::size_t i = 0; i < ppd.size(); ++i) {
      const double li = eval.log_conditional(i, p);
      sum += li;
      const ConditionalDensity f(ppd.points[i], without(ppd.points, i), p, kde, quad);
      CHECK(li == f.log_density(ppd.points[i]));
      CHECK(li == doctest::Approx(oracle::direct_log_conditional(ppd, i, p, kde, quad)).epsilon(1e-10));
    }
    CHECK(eval(p) == sum);
    CHECK(log_pseudolikelihood(ppd, p, kde, quad) == sum);
  }
}

TEST_CASE("renormalized neighbour mode") {
  Rng rng(13);
  const auto ppd = random_ppd(rng, 14);
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde, 24);
  const auto p = params(Variant::modified, {4.0, -1.0, 0.5}, 0.6);
  const PseudolikelihoodEvaluator literal(ppd, kde, quad, 3, NeighborMode::literal);
  const PseudolikelihoodEvaluator renorm(ppd, kde, quad, 3, NeighborMode::renormalize);
  for (std::size_t i = 0; i < ppd.size(); ++i) {
    const ConditionalDensity f(ppd.points[i], without(ppd.points, i), p, kde, quad, NeighborMode::renormalize);
    CHECK(renorm.log_conditional(i, p) == doctest::Approx(f.log_density(ppd.points[i])).epsilon(1e-12));
  }
  CHECK(literal(p) != renorm(p));
  // With theta = 0 the neighbour choice is irrelevant.
  const auto zero = params(Variant::modified, {0.0, 0.0, 0.0}, 0.6);
  CHECK(literal(zero) == doctest::Approx(renorm(zero)).epsilon(1e-13));
}

TEST_CASE("log-pseudolikelihood on the smallest legal diagram") {
  ProjectedDiagram ppd;
  ppd.points = {{0.1, 0.2}, {0.4, 0.05}, {0.3, 0.3}, {0.7, 0.1}};
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde);
  for (auto v : {Variant::original, Variant::modified}) {
    CHECK(std::isfinite(log_pseudolikelihood(ppd, params(v, {2.0, -1.0, 0.3}, 1.5), kde, quad)));
  }
  CHECK_THROWS_AS(log_pseudolikelihood(ppd, params(Variant::original, {1, 1, 1, 1}, 0.0), kde, quad),
                  InvalidArgument);
}

TEST_CASE("log-pseudolikelihood falls once theta_1 is past its optimum") {
  Rng rng(77);
  const auto ppd = random_ppd(rng, 16);
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde, 40);
  const auto low = params(Variant::original, {400.0, 0.0, 0.0}, 0.5);
  const auto high = params(Variant::original, {401.0, 0.0, 0.0}, 0.5);
  double direct_low = 0.0, direct_high = 0.0;
  for (std::size_t i = 0; i < ppd.size(); ++i) {
    direct_low += oracle::direct_log_conditional(ppd, i, low, kde, quad);
    direct_high += oracle::direct_log_conditional(ppd, i, high, kde, quad);
  }
  CHECK(direct_high < direct_low);
  CHECK(log_pseudolikelihood(ppd, low, kde, quad) == doctest::Approx(direct_low).epsilon(1e-10));
  CHECK(log_pseudolikelihood(ppd, high, kde, quad) == doctest::Approx(direct_high).epsilon(1e-10));
}

TEST_CASE("degenerate normalization reports the point") {
  ProjectedDiagram ppd;
  ppd.points = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {0.5, 0.5}};
  const Kde kde = fit_ppd_kde(ppd);
  const auto quad = default_quadrature(ppd, kde);
  const auto p = params(Variant::original, {1e5, 0.0, 0.0}, 0.0);
  try {
    log_pseudolikelihood(ppd, p, kde, quad);
    FAIL("expected degenerate normalization");
  } catch (const DegenerateNormalization& e) {
    CHECK(e.point_index() == 0);
  }
}
