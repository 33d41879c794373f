#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tdarep/synthetic.hpp"

namespace tdarep {

// Gaussian kernel density estimator with a diagonal bandwidth:
//   f(p) = 1 / (n * prod_j sqrt(2 pi) eta_j) * sum_i exp(-sum_j (p_j - z_ij)^2 / (2 eta_j^2))
// Samples farther than 12 eta_j along any axis contribute exactly zero.
class Kde {
 public:
  Kde(PointCloud samples, std::vector<double> bandwidth);

  double operator()(std::span<const double> p) const;
  double operator()(double x, double y) const {
    const double p[2] = {x, y};
    return (*this)(p);
  }

  std::size_t dim() const noexcept { return samples_.dim(); }
  const PointCloud& samples() const noexcept { return samples_; }
  const std::vector<double>& bandwidth() const noexcept { return bandwidth_; }

 private:
  PointCloud samples_;
  std::vector<double> bandwidth_;
  std::vector<double> inv_two_var_;
  double normalizer_ = 0.0;
};

inline constexpr double kKdeCutoffSigmas = 12.0;

// Silverman's diagonal rule: eta_j = sd_j * (4 / ((D + 2) n))^(1 / (D + 4)).
// Needs at least two points and a nonzero spread on every axis.
std::vector<double> silverman_bandwidth(const PointCloud& points);

Kde fit_kde(const PointCloud& points, std::optional<std::vector<double>> bandwidth = {});

// Same bandwidth on every axis.
Kde fit_kde(const PointCloud& points, double bandwidth);

double kde_eval(const Kde& kde, std::span<const double> p);

struct Box {
  std::vector<std::pair<double, double>> ranges;  // (min, max) per axis

  std::size_t dim() const noexcept { return ranges.size(); }
};

// Per-axis min/max of the points.
Box bounding_box(const PointCloud& points);

// Values on a tensor grid, row-major with the last axis varying fastest.
struct ScalarField {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;

  std::size_t dim() const noexcept { return axes.size(); }
  std::vector<std::size_t> shape() const;
  std::size_t size() const noexcept { return values.size(); }
};

// Evaluates the kde on `resolution` evenly spaced nodes per axis (endpoints
// included). Nodes are evaluated in parallel; each value is independent.
ScalarField kde_grid(const Kde& kde, const Box& box, std::size_t resolution);

// Text format: "dim,D", then one "axis,v0,v1,..." line per axis, then
// "values" followed by one value per line in row-major order.
void save_field(const ScalarField& field, const std::filesystem::path& path);
ScalarField load_field(const std::filesystem::path& path);

}  // namespace tdarep
