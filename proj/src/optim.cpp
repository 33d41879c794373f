#include "tdarep/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tdarep/error.hpp"

namespace tdarep {

namespace {

// Internally we minimize -f; non-finite values become +inf.
double cost_of(double value) {
  return std::isfinite(value) ? -value : std::numeric_limits<double>::infinity();
}

}  // namespace

NelderMeadResult nelder_mead_maximize(
    const std::function<double(std::span<const double>)>& f, std::vector<double> start,
    const NelderMeadOptions& options,
    const std::function<void(std::span<const double>, double)>& on_iteration) {
  const std::size_t n = start.size();
  if (n == 0) throw InvalidArgument("nelder_mead: empty start vector");
  std::vector<double> step = options.initial_step;
  if (step.empty()) step.assign(n, 1.0);
  if (step.size() != n) throw InvalidArgument("nelder_mead: step size mismatch");

  NelderMeadResult result;
  auto evaluate = [&](const std::vector<double>& x) {
    ++result.evaluations;
    return cost_of(f(x));
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> cost(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) cost[i] = evaluate(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), reflected(n), trial(n);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> c(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      c[i] = cost[order[i]];
    }
    simplex = std::move(s);
    cost = std::move(c);
  };
  auto point_along = [&](double t, std::vector<double>& out) {
    // centroid + t * (centroid - worst)
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (centroid[j] - simplex[n][j]);
  };

  sort_simplex();
  while (true) {
    const bool finite_spread = std::isfinite(cost[n]) && std::isfinite(cost[0]);
    if (finite_spread && cost[n] - cost[0] < options.tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    point_along(1.0, reflected);
    const double reflected_cost = evaluate(reflected);
    if (reflected_cost < cost[0]) {
      point_along(2.0, trial);
      const double expanded_cost = evaluate(trial);
      if (expanded_cost < reflected_cost) {
        simplex[n] = trial;
        cost[n] = expanded_cost;
      } else {
        simplex[n] = reflected;
        cost[n] = reflected_cost;
      }
    } else if (reflected_cost < cost[n - 1]) {
      simplex[n] = reflected;
      cost[n] = reflected_cost;
    } else {
      const bool outside = reflected_cost < cost[n];
      point_along(outside ? 0.5 : -0.5, trial);
      const double contracted_cost = evaluate(trial);
      if (contracted_cost < (outside ? reflected_cost : cost[n])) {
        simplex[n] = trial;
        cost[n] = contracted_cost;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
          cost[i] = evaluate(simplex[i]);
        }
      }
    }
    sort_simplex();
    if (on_iteration) on_iteration(simplex[0], -cost[0]);
  }

  result.x = simplex[0];
  result.value = -cost[0];
  return result;
}

GoldenSectionResult golden_section_maximize(const std::function<double(double)>& f, double lo,
                                            double hi, double tolerance) {
  if (!(lo <= hi)) throw InvalidArgument("golden section needs lo <= hi");
  if (!(tolerance > 0.0)) throw InvalidArgument("golden section needs a positive tolerance");
  GoldenSectionResult result;
  auto probe = [&](double x) {
    double v = f(x);
    if (!std::isfinite(v)) v = -std::numeric_limits<double>::infinity();
    result.probes.push_back(x);
    result.values.push_back(v);
    return v;
  };
  if (hi - lo <= tolerance) {
    result.x = lo;
    result.value = probe(lo);
    return result;
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = probe(c);
  double fd = probe(d);
  while (b - a > 0.5 * tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = probe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = probe(d);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.values.size(); ++i) {
    if (result.values[i] > result.values[best]) best = i;
  }
  result.x = result.probes[best];
  result.value = result.values[best];
  return result;
}

}  // namespace tdarep
