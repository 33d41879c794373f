#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdarep/diagram.hpp"
#include "tdarep/kde.hpp"

namespace tdarep {

// original: f(x) ∝ KDE(x)^alpha * exp(-sum_k theta_k d_k(x))
// modified: f(x) ∝ exp(-sum_k theta_k d_k(x) * KDE(x)^alpha)
// where d_k(x) is the distance from x to its k-th nearest neighbour.
enum class Variant { original, modified };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);

// Which neighbours enter the energy of a free point z inside the
// normalizing integral (and of a proposed point in MCMC):
//   literal     - the anchor point's K nearest neighbours, held fixed;
//   renormalize - z's own K nearest points of the context.
enum class NeighborMode { literal, renormalize };

std::string to_string(NeighborMode mode);
NeighborMode neighbor_mode_from_string(const std::string& name);

struct ModelParams {
  Variant variant = Variant::modified;
  int K = 3;
  std::vector<double> theta;
  double alpha = 0.0;

  void validate() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Tensor-product trapezoidal rule on [x1_min, x1_max] x [x2_min, x2_max].
struct QuadratureSpec {
  double x1_min = 0.0;
  double x1_max = 1.0;
  double x2_min = 0.0;
  double x2_max = 1.0;
  std::size_t nodes1 = 64;
  std::size_t nodes2 = 64;

  void validate() const;
  double area() const noexcept { return (x1_max - x1_min) * (x2_max - x2_min); }
  friend bool operator==(const QuadratureSpec&, const QuadratureSpec&) = default;
};

// Data range of the PPD inflated by three bandwidths per axis, clipped at x2 = 0.
QuadratureSpec default_quadrature(const ProjectedDiagram& ppd, const Kde& kde,
                                  std::size_t nodes = 64);

PointCloud ppd_points(const ProjectedDiagram& ppd);

// Kde over the PPD points; plug-in surrogate bandwidth unless one is given.
Kde fit_ppd_kde(const ProjectedDiagram& ppd, std::optional<std::vector<double>> bandwidth = {});

// KDE values below this are treated as this value inside KDE(x)^alpha.
inline constexpr double kKdeFloor = 1e-300;

double point_distance(PpdPoint a, PpdPoint b) noexcept;

struct KnnTable {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> distance;     // n x k, row-major
  std::vector<std::size_t> index;   // n x k, row-major

  double at(std::size_t i, std::size_t j) const { return distance[i * k + j]; }
  std::span<const std::size_t> neighbors(std::size_t i) const { return {index.data() + i * k, k}; }
  // Column j sums to L_{j+1}, the total j+1-th nearest-neighbour distance.
  std::vector<double> column_sums() const;
};

// Rows sorted by distance (ties by index); the point itself is excluded.
KnnTable knn_distances(const ProjectedDiagram& ppd, int K);

// Indices of the K points of `context` nearest to z (ties by index).
std::vector<std::size_t> nearest_in(PpdPoint z, std::span<const PpdPoint> context, std::size_t K,
                                    std::size_t skip = static_cast<std::size_t>(-1));

// sum_k theta_k ||x - neighbors[k]||, times KDE(x)^alpha for the modified variant.
double local_energy(PpdPoint x, std::span<const PpdPoint> neighbors, const ModelParams& params,
                    const Kde& kde);

// log of the unnormalized conditional density at z for the given neighbour set.
double log_numerator(PpdPoint z, std::span<const PpdPoint> neighbors, const ModelParams& params,
                     const Kde& kde);

namespace detail {

struct QuadratureNodes {
  std::vector<PpdPoint> points;
  std::vector<double> log_weight;
  std::vector<double> log_kde;  // floored

  QuadratureNodes(const QuadratureSpec& quad, const Kde& kde);
  std::size_t size() const noexcept { return points.size(); }
};

// Per-node terms for one parameter setting: log integrand = base - s * scale,
// where s is the theta-weighted neighbour distance sum at the node.
struct IntegrandTerms {
  std::vector<double> base;
  std::vector<double> scale;

  IntegrandTerms(const QuadratureNodes& nodes, const ModelParams& params);
};

// log of the trapezoidal integral, given s at every node. Throws
// DegenerateNormalization when the integral is below 1e-300 or not finite.
double log_normalizer(const IntegrandTerms& terms, std::span<const double> energy_sums,
                      long point_index);

}  // namespace detail

// The conditional density of one point given a fixed context (the other
// N-1 points). The normalizer depends only on the anchor's neighbour set
// (literal) or on the context (renormalize), never on the evaluation point.
class ConditionalDensity {
 public:
  ConditionalDensity(PpdPoint anchor, std::vector<PpdPoint> context, ModelParams params,
                     const Kde& kde, const QuadratureSpec& quad,
                     NeighborMode mode = NeighborMode::literal);

  double log_normalizer() const noexcept { return log_z_; }
  double log_density(PpdPoint z) const;
  double density(PpdPoint z) const;
  const std::vector<PpdPoint>& anchor_neighbors() const noexcept { return anchor_neighbors_; }

 private:
  std::vector<PpdPoint> context_;
  ModelParams params_;
  const Kde* kde_;
  NeighborMode mode_;
  std::vector<PpdPoint> anchor_neighbors_;
  double log_z_ = 0.0;
};

double conditional_density(PpdPoint x, std::span<const PpdPoint> context, const ModelParams& params,
                           const Kde& kde, const QuadratureSpec& quad,
                           NeighborMode mode = NeighborMode::literal);

// Log-pseudolikelihood over a fixed diagram with quadrature data cached
// across parameter settings. This is what the fitting code calls repeatedly.
class PseudolikelihoodEvaluator {
 public:
  PseudolikelihoodEvaluator(const ProjectedDiagram& ppd, const Kde& kde, const QuadratureSpec& quad,
                            int K, NeighborMode mode = NeighborMode::literal);

  double log_conditional(std::size_t i, const ModelParams& params) const;
  // Sum of log_conditional over all points in index order.
  double operator()(const ModelParams& params) const;

  std::size_t size() const noexcept { return points_.size(); }
  int K() const noexcept { return K_; }

 private:
  double log_conditional(std::size_t i, const ModelParams& params,
                         const detail::IntegrandTerms& terms) const;

  std::vector<PpdPoint> points_;
  int K_;
  NeighborMode mode_;
  detail::QuadratureNodes nodes_;
  KnnTable knn_;
  std::vector<double> log_kde_points_;
  std::vector<double> node_distance_;           // point-major: [i * nodes + m]
  std::vector<std::uint32_t> node_neighbors_;   // renormalize: K+1 nearest per node
};

double log_pseudolikelihood(const ProjectedDiagram& ppd, const ModelParams& params, const Kde& kde,
                            const QuadratureSpec& quad, NeighborMode mode = NeighborMode::literal);

}  // namespace tdarep
