#include "tdarep/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tdarep/csv.hpp"
#include "tdarep/error.hpp"
#include "tdarep/parallel.hpp"

namespace tdarep {

Kde::Kde(PointCloud samples, std::vector<double> bandwidth)
    : samples_(std::move(samples)), bandwidth_(std::move(bandwidth)) {
  if (samples_.empty()) throw InvalidArgument("kde needs at least one sample");
  if (bandwidth_.size() != samples_.dim()) {
    throw InvalidArgument("bandwidth length " + std::to_string(bandwidth_.size()) +
                          " does not match dimension " + std::to_string(samples_.dim()));
  }
  double scale = static_cast<double>(samples_.size());
  inv_two_var_.reserve(bandwidth_.size());
  for (double eta : bandwidth_) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw InvalidArgument("bandwidth entries must be positive and finite");
    }
    inv_two_var_.push_back(1.0 / (2.0 * eta * eta));
    scale *= std::sqrt(2.0 * std::numbers::pi) * eta;
  }
  normalizer_ = 1.0 / scale;
}

double Kde::operator()(std::span<const double> p) const {
  const std::size_t dim = samples_.dim();
  if (p.size() != dim) {
    throw InvalidArgument("kde evaluated at a " + std::to_string(p.size()) +
                          "-vector, expected dimension " + std::to_string(dim));
  }
  const double* z = samples_.coords().data();
  double sum = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i, z += dim) {
    double exponent = 0.0;
    bool far = false;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = p[j] - z[j];
      if (std::abs(diff) > kKdeCutoffSigmas * bandwidth_[j]) {
        far = true;
        break;
      }
      exponent += diff * diff * inv_two_var_[j];
    }
    if (!far) sum += std::exp(-exponent);
  }
  return sum * normalizer_;
}

std::vector<double> silverman_bandwidth(const PointCloud& points) {
  const std::size_t n = points.size();
  if (n < 2) throw InvalidArgument("plug-in bandwidth needs at least two points");
  const std::size_t dim = points.dim();
  const double factor = std::pow(4.0 / ((static_cast<double>(dim) + 2.0) * static_cast<double>(n)),
                                 1.0 / (static_cast<double>(dim) + 4.0));
  std::vector<double> result(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += points[i][j];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = points[i][j] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw InvalidArgument("plug-in bandwidth undefined: axis " + std::to_string(j + 1) +
                            " has zero spread");
    }
    result[j] = sd * factor;
  }
  return result;
}

Kde fit_kde(const PointCloud& points, std::optional<std::vector<double>> bandwidth) {
  if (points.empty()) throw InvalidArgument("fit_kde: no points");
  if (!bandwidth) bandwidth = silverman_bandwidth(points);
  return Kde(points, std::move(*bandwidth));
}

Kde fit_kde(const PointCloud& points, double bandwidth) {
  return fit_kde(points, std::vector<double>(points.dim(), bandwidth));
}

double kde_eval(const Kde& kde, std::span<const double> p) { return kde(p); }

Box bounding_box(const PointCloud& points) {
  if (points.empty()) throw InvalidArgument("bounding box of an empty point cloud");
  Box box;
  box.ranges.assign(points.dim(), {points[0][0], points[0][0]});
  for (std::size_t j = 0; j < points.dim(); ++j) box.ranges[j] = {points[0][j], points[0][j]};
  for (std::size_t i = 1; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.dim(); ++j) {
      box.ranges[j].first = std::min(box.ranges[j].first, points[i][j]);
      box.ranges[j].second = std::max(box.ranges[j].second, points[i][j]);
    }
  }
  return box;
}

std::vector<std::size_t> ScalarField::shape() const {
  std::vector<std::size_t> s;
  s.reserve(axes.size());
  for (const auto& axis : axes) s.push_back(axis.size());
  return s;
}

ScalarField kde_grid(const Kde& kde, const Box& box, std::size_t resolution) {
  if (resolution < 2) throw InvalidArgument("kde_grid: resolution must be at least 2");
  if (box.dim() != kde.dim()) throw InvalidArgument("kde_grid: box dimension mismatch");
  ScalarField field;
  std::size_t total = 1;
  for (const auto& [lo, hi] : box.ranges) {
    if (!(lo < hi)) throw InvalidArgument("kde_grid: every axis needs min < max");
    std::vector<double> axis(resolution);
    const double step = (hi - lo) / static_cast<double>(resolution - 1);
    for (std::size_t k = 0; k < resolution; ++k) axis[k] = lo + step * static_cast<double>(k);
    axis.back() = hi;
    field.axes.push_back(std::move(axis));
    total *= resolution;
  }
  field.values.assign(total, 0.0);

  const std::size_t dim = kde.dim();
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    std::vector<double> p(dim);
    const std::size_t end = std::min(total, (c + 1) * kChunk);
    for (std::size_t flat = c * kChunk; flat < end; ++flat) {
      std::size_t rest = flat;
      for (std::size_t j = dim; j-- > 0;) {
        p[j] = field.axes[j][rest % resolution];
        rest /= resolution;
      }
      field.values[flat] = kde(p);
    }
  });
  return field;
}

void save_field(const ScalarField& field, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "dim," << field.dim() << '\n';
  for (const auto& axis : field.axes) {
    out << "axis";
    for (double v : axis) out << ',' << csv::format_double(v);
    out << '\n';
  }
  out << "values\n";
  for (double v : field.values) out << csv::format_double(v) << '\n';
  csv::write_atomic(path, out.str());
}

ScalarField load_field(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ParseError("empty field file", 1);
  const auto head = csv::split(lines[0]);
  if (head.size() != 2 || csv::trim(head[0]) != "dim") throw ParseError("expected dim,D", 1);
  const auto dim = static_cast<std::size_t>(csv::parse_long(head[1], 1));
  if (lines.size() < dim + 2) throw ParseError("truncated field header", lines.size());
  ScalarField field;
  std::size_t total = 1;
  for (std::size_t j = 0; j < dim; ++j) {
    const auto fields = csv::split(lines[1 + j]);
    if (fields.empty() || csv::trim(fields[0]) != "axis") throw ParseError("expected axis row", j + 2);
    std::vector<double> axis;
    for (std::size_t k = 1; k < fields.size(); ++k) axis.push_back(csv::parse_double(fields[k], j + 2));
    total *= axis.size();
    field.axes.push_back(std::move(axis));
  }
  if (csv::trim(lines[dim + 1]) != "values") throw ParseError("expected 'values'", dim + 2);
  for (std::size_t l = dim + 2; l < lines.size(); ++l) {
    if (csv::trim(lines[l]).empty()) continue;
    field.values.push_back(csv::parse_double(lines[l], l + 1));
  }
  if (field.values.size() != total) {
    throw ParseError("expected " + std::to_string(total) + " values, found " +
                         std::to_string(field.values.size()),
                     lines.size());
  }
  return field;
}

}  // namespace tdarep
