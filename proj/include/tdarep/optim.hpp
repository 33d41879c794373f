#pragma once

#include <functional>
#include <span>
#include <vector>

namespace tdarep {

struct NelderMeadOptions {
  // Stop once max - min of the objective over the simplex drops below this.
  double tolerance = 1e-6;
  int max_iterations = 500;
  // Per-coordinate offset of the initial simplex vertices from the start.
  std::vector<double> initial_step;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Maximizes f. Non-finite objective values count as -infinity. `on_iteration`
// sees the best vertex after every iteration and may throw to abort.
NelderMeadResult nelder_mead_maximize(
    const std::function<double(std::span<const double>)>& f, std::vector<double> start,
    const NelderMeadOptions& options,
    const std::function<void(std::span<const double>, double)>& on_iteration = {});

struct GoldenSectionResult {
  double x = 0.0;
  double value = 0.0;
  std::vector<double> probes;   // in evaluation order
  std::vector<double> values;
};

// Maximizes a unimodal f on [lo, hi] until the bracket is narrower than
// tolerance / 2; returns the best probe. An interval no wider than the
// tolerance is treated as the single point lo.
GoldenSectionResult golden_section_maximize(const std::function<double(double)>& f, double lo,
                                            double hi, double tolerance);

}  // namespace tdarep
