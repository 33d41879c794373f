#include "tdarep/gibbs_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tdarep/error.hpp"

namespace tdarep {

std::string to_string(Variant variant) {
  return variant == Variant::original ? "original" : "modified";
}

Variant variant_from_string(const std::string& name) {
  if (name == "original") return Variant::original;
  if (name == "modified") return Variant::modified;
  throw InvalidArgument("unknown model variant '" + name + "'");
}

std::string to_string(NeighborMode mode) {
  return mode == NeighborMode::literal ? "literal" : "renormalize";
}

NeighborMode neighbor_mode_from_string(const std::string& name) {
  if (name == "literal") return NeighborMode::literal;
  if (name == "renormalize") return NeighborMode::renormalize;
  throw InvalidArgument("unknown neighbour mode '" + name + "'");
}

void ModelParams::validate() const {
  if (K < 1) throw InvalidArgument("cluster size K must be at least 1");
  if (theta.size() != static_cast<std::size_t>(K)) {
    throw InvalidArgument("theta has " + std::to_string(theta.size()) + " entries, expected K = " +
                          std::to_string(K));
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 0");
  for (double t : theta) {
    if (!std::isfinite(t)) throw InvalidArgument("theta entries must be finite");
  }
}

void QuadratureSpec::validate() const {
  if (!(x1_min < x1_max) || !(x2_min < x2_max)) throw InvalidArgument("quadrature box is degenerate");
  if (x2_min < 0.0) throw InvalidArgument("quadrature box must satisfy x2 >= 0");
  if (nodes1 < 8 || nodes2 < 8) throw InvalidArgument("quadrature needs at least 8 nodes per axis");
}

PointCloud ppd_points(const ProjectedDiagram& ppd) {
  std::vector<double> coords;
  coords.reserve(2 * ppd.size());
  for (const auto& x : ppd.points) {
    coords.push_back(x.x1);
    coords.push_back(x.x2);
  }
  return PointCloud(2, std::move(coords));
}

Kde fit_ppd_kde(const ProjectedDiagram& ppd, std::optional<std::vector<double>> bandwidth) {
  if (ppd.points.empty()) throw InvalidArgument("cannot fit a kde to an empty diagram");
  return fit_kde(ppd_points(ppd), std::move(bandwidth));
}

QuadratureSpec default_quadrature(const ProjectedDiagram& ppd, const Kde& kde, std::size_t nodes) {
  if (ppd.points.empty()) throw InvalidArgument("quadrature box of an empty diagram");
  if (kde.dim() != 2) throw InvalidArgument("PPD kde must be two-dimensional");
  double lo1 = ppd.points[0].x1, hi1 = lo1, lo2 = ppd.points[0].x2, hi2 = lo2;
  for (const auto& x : ppd.points) {
    lo1 = std::min(lo1, x.x1);
    hi1 = std::max(hi1, x.x1);
    lo2 = std::min(lo2, x.x2);
    hi2 = std::max(hi2, x.x2);
  }
  const auto& eta = kde.bandwidth();
  QuadratureSpec quad;
  quad.x1_min = lo1 - 3.0 * eta[0];
  quad.x1_max = hi1 + 3.0 * eta[0];
  quad.x2_min = std::max(0.0, lo2 - 3.0 * eta[1]);
  quad.x2_max = hi2 + 3.0 * eta[1];
  quad.nodes1 = nodes;
  quad.nodes2 = nodes;
  return quad;
}

double point_distance(PpdPoint a, PpdPoint b) noexcept {
  const double d1 = a.x1 - b.x1;
  const double d2 = a.x2 - b.x2;
  return std::sqrt(d1 * d1 + d2 * d2);
}

std::vector<double> KnnTable::column_sums() const {
  std::vector<double> sums(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) sums[j] += at(i, j);
  }
  return sums;
}

std::vector<std::size_t> nearest_in(PpdPoint z, std::span<const PpdPoint> context, std::size_t K,
                                    std::size_t skip) {
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(context.size());
  for (std::size_t j = 0; j < context.size(); ++j) {
    if (j != skip) cand.emplace_back(point_distance(z, context[j]), j);
  }
  if (cand.size() < K) {
    throw InvalidArgument("need at least K = " + std::to_string(K) + " context points, have " +
                          std::to_string(cand.size()));
  }
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(K), cand.end());
  std::vector<std::size_t> out(K);
  for (std::size_t k = 0; k < K; ++k) out[k] = cand[k].second;
  return out;
}

KnnTable knn_distances(const ProjectedDiagram& ppd, int K) {
  const std::size_t n = ppd.size();
  if (K < 1 || n <= static_cast<std::size_t>(K)) {
    throw InvalidArgument("knn_distances needs N > K, got N = " + std::to_string(n) +
                          ", K = " + std::to_string(K));
  }
  KnnTable table;
  table.n = n;
  table.k = static_cast<std::size_t>(K);
  table.distance.resize(n * table.k);
  table.index.resize(n * table.k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = nearest_in(ppd.points[i], ppd.points, table.k, i);
    for (std::size_t k = 0; k < table.k; ++k) {
      table.index[i * table.k + k] = nb[k];
      table.distance[i * table.k + k] = point_distance(ppd.points[i], ppd.points[nb[k]]);
    }
  }
  return table;
}

namespace {

double floored_log_kde(const Kde& kde, PpdPoint z) {
  return std::log(std::max(kde(z.x1, z.x2), kKdeFloor));
}

double energy_sum(PpdPoint z, std::span<const PpdPoint> neighbors, std::span<const double> theta) {
  double s = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) s += theta[k] * point_distance(z, neighbors[k]);
  return s;
}

double log_numerator_from(double s, double log_kde, const ModelParams& params) {
  if (params.variant == Variant::original) return params.alpha * log_kde - s;
  return -s * std::exp(params.alpha * log_kde);
}

void check_neighbors(std::span<const PpdPoint> neighbors, const ModelParams& params) {
  if (neighbors.size() != static_cast<std::size_t>(params.K)) {
    throw InvalidArgument("expected K = " + std::to_string(params.K) + " neighbours, got " +
                          std::to_string(neighbors.size()));
  }
}

}  // namespace

double local_energy(PpdPoint x, std::span<const PpdPoint> neighbors, const ModelParams& params,
                    const Kde& kde) {
  params.validate();
  check_neighbors(neighbors, params);
  const double s = energy_sum(x, neighbors, params.theta);
  if (params.variant == Variant::original) return s;
  return s * std::exp(params.alpha * floored_log_kde(kde, x));
}

double log_numerator(PpdPoint z, std::span<const PpdPoint> neighbors, const ModelParams& params,
                     const Kde& kde) {
  check_neighbors(neighbors, params);
  return log_numerator_from(energy_sum(z, neighbors, params.theta), floored_log_kde(kde, z), params);
}

namespace detail {

QuadratureNodes::QuadratureNodes(const QuadratureSpec& quad, const Kde& kde) {
  quad.validate();
  const double h1 = (quad.x1_max - quad.x1_min) / static_cast<double>(quad.nodes1 - 1);
  const double h2 = (quad.x2_max - quad.x2_min) / static_cast<double>(quad.nodes2 - 1);
  const std::size_t total = quad.nodes1 * quad.nodes2;
  points.reserve(total);
  log_weight.reserve(total);
  log_kde.reserve(total);
  for (std::size_t a = 0; a < quad.nodes1; ++a) {
    const double wa = (a == 0 || a + 1 == quad.nodes1) ? 0.5 * h1 : h1;
    const double x1 = a + 1 == quad.nodes1 ? quad.x1_max : quad.x1_min + h1 * static_cast<double>(a);
    for (std::size_t b = 0; b < quad.nodes2; ++b) {
      const double wb = (b == 0 || b + 1 == quad.nodes2) ? 0.5 * h2 : h2;
      const double x2 = b + 1 == quad.nodes2 ? quad.x2_max : quad.x2_min + h2 * static_cast<double>(b);
      const PpdPoint z{x1, x2};
      points.push_back(z);
      log_weight.push_back(std::log(wa * wb));
      log_kde.push_back(floored_log_kde(kde, z));
    }
  }
}

IntegrandTerms::IntegrandTerms(const QuadratureNodes& nodes, const ModelParams& params) {
  base.resize(nodes.size());
  scale.resize(nodes.size());
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    if (params.variant == Variant::original) {
      base[m] = nodes.log_weight[m] + params.alpha * nodes.log_kde[m];
      scale[m] = 1.0;
    } else {
      base[m] = nodes.log_weight[m];
      scale[m] = std::exp(params.alpha * nodes.log_kde[m]);
    }
  }
}

double log_normalizer(const IntegrandTerms& terms, std::span<const double> energy_sums,
                      long point_index) {
  const std::size_t m_count = terms.base.size();
  thread_local std::vector<double> log_terms;
  log_terms.resize(m_count);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < m_count; ++m) {
    log_terms[m] = terms.base[m] - energy_sums[m] * terms.scale[m];
    top = std::max(top, log_terms[m]);
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) sum += std::exp(log_terms[m] - top);
  const double log_z = top + std::log(sum);
  static const double kLogTiny = std::log(1e-300);
  if (!std::isfinite(log_z) || log_z < kLogTiny) {
    throw DegenerateNormalization(
        "normalizing integral of the conditional density is degenerate (log Z = " +
            std::to_string(log_z) + ")" +
            (point_index >= 0 ? " at point " + std::to_string(point_index) : std::string()),
        point_index);
  }
  return log_z;
}

}  // namespace detail

ConditionalDensity::ConditionalDensity(PpdPoint anchor, std::vector<PpdPoint> context,
                                       ModelParams params, const Kde& kde,
                                       const QuadratureSpec& quad, NeighborMode mode)
    : context_(std::move(context)), params_(std::move(params)), kde_(&kde), mode_(mode) {
  params_.validate();
  const auto K = static_cast<std::size_t>(params_.K);
  for (std::size_t idx : nearest_in(anchor, context_, K)) anchor_neighbors_.push_back(context_[idx]);

  const detail::QuadratureNodes nodes(quad, kde);
  const detail::IntegrandTerms terms(nodes, params_);
  std::vector<double> sums(nodes.size());
  std::vector<PpdPoint> nb(K);
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    if (mode_ == NeighborMode::literal) {
      sums[m] = energy_sum(nodes.points[m], anchor_neighbors_, params_.theta);
    } else {
      const auto idx = nearest_in(nodes.points[m], context_, K);
      for (std::size_t k = 0; k < K; ++k) nb[k] = context_[idx[k]];
      sums[m] = energy_sum(nodes.points[m], nb, params_.theta);
    }
  }
  log_z_ = detail::log_normalizer(terms, sums, -1);
}

double ConditionalDensity::log_density(PpdPoint z) const {
  const auto K = static_cast<std::size_t>(params_.K);
  if (mode_ == NeighborMode::literal) {
    return log_numerator(z, anchor_neighbors_, params_, *kde_) - log_z_;
  }
  std::vector<PpdPoint> nb(K);
  const auto idx = nearest_in(z, context_, K);
  for (std::size_t k = 0; k < K; ++k) nb[k] = context_[idx[k]];
  return log_numerator(z, nb, params_, *kde_) - log_z_;
}

double ConditionalDensity::density(PpdPoint z) const { return std::exp(log_density(z)); }

double conditional_density(PpdPoint x, std::span<const PpdPoint> context, const ModelParams& params,
                           const Kde& kde, const QuadratureSpec& quad, NeighborMode mode) {
  const ConditionalDensity f(x, {context.begin(), context.end()}, params, kde, quad, mode);
  return f.density(x);
}

PseudolikelihoodEvaluator::PseudolikelihoodEvaluator(const ProjectedDiagram& ppd, const Kde& kde,
                                                     const QuadratureSpec& quad, int K,
                                                     NeighborMode mode)
    : points_(ppd.points), K_(K), mode_(mode), nodes_(quad, kde),
      knn_(knn_distances(ppd, K)) {
  const std::size_t n = points_.size();
  const std::size_t m_count = nodes_.size();
  log_kde_points_.reserve(n);
  for (const auto& x : points_) log_kde_points_.push_back(floored_log_kde(kde, x));
  node_distance_.resize(n * m_count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      node_distance_[i * m_count + m] = point_distance(nodes_.points[m], points_[i]);
    }
  }
  if (mode_ == NeighborMode::renormalize) {
    const std::size_t keep = static_cast<std::size_t>(K) + 1;
    node_neighbors_.resize(m_count * keep);
    for (std::size_t m = 0; m < m_count; ++m) {
      const auto idx = nearest_in(nodes_.points[m], points_, keep);
      for (std::size_t k = 0; k < keep; ++k) {
        node_neighbors_[m * keep + k] = static_cast<std::uint32_t>(idx[k]);
      }
    }
  }
}

double PseudolikelihoodEvaluator::log_conditional(std::size_t i, const ModelParams& params) const {
  params.validate();
  if (params.K != K_) throw InvalidArgument("parameter K does not match the evaluator");
  const detail::IntegrandTerms terms(nodes_, params);
  return log_conditional(i, params, terms);
}

double PseudolikelihoodEvaluator::log_conditional(std::size_t i, const ModelParams& params,
                                                  const detail::IntegrandTerms& terms) const {
  const std::size_t m_count = nodes_.size();
  const auto K = static_cast<std::size_t>(K_);
  const auto nb = knn_.neighbors(i);
  thread_local std::vector<double> sums;
  sums.assign(m_count, 0.0);
  if (mode_ == NeighborMode::literal) {
    for (std::size_t m = 0; m < m_count; ++m) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += params.theta[k] * node_distance_[nb[k] * m_count + m];
      sums[m] = s;
    }
  } else {
    const std::size_t keep = K + 1;
    for (std::size_t m = 0; m < m_count; ++m) {
      double s = 0.0;
      std::size_t k = 0;
      for (std::size_t r = 0; r < keep && k < K; ++r) {
        const std::uint32_t j = node_neighbors_[m * keep + r];
        if (j == i) continue;
        s += params.theta[k] * node_distance_[j * m_count + m];
        ++k;
      }
      sums[m] = s;
    }
  }
  const double log_z = detail::log_normalizer(terms, sums, static_cast<long>(i));

  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) s += params.theta[k] * point_distance(points_[i], points_[nb[k]]);
  return log_numerator_from(s, log_kde_points_[i], params) - log_z;
}

double PseudolikelihoodEvaluator::operator()(const ModelParams& params) const {
  params.validate();
  if (params.K != K_) throw InvalidArgument("parameter K does not match the evaluator");
  const detail::IntegrandTerms terms(nodes_, params);
  double total = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) total += log_conditional(i, params, terms);
  return total;
}

double log_pseudolikelihood(const ProjectedDiagram& ppd, const ModelParams& params, const Kde& kde,
                            const QuadratureSpec& quad, NeighborMode mode) {
  params.validate();
  const PseudolikelihoodEvaluator evaluator(ppd, kde, quad, params.K, mode);
  return evaluator(params);
}

}  // namespace tdarep
