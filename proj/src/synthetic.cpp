#include "tdarep/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "tdarep/csv.hpp"
#include "tdarep/error.hpp"
#include "tdarep/random.hpp"

namespace tdarep {

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw InvalidArgument("point cloud dimension must be positive");
  if (coords_.size() % dim_ != 0) {
    throw InvalidArgument("coordinate count is not a multiple of the dimension");
  }
}

void PointCloud::append(std::span<const double> point) {
  if (dim_ == 0) dim_ = point.size();
  if (point.size() != dim_) throw InvalidArgument("point has wrong dimension");
  coords_.insert(coords_.end(), point.begin(), point.end());
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::concentric: return "concentric";
    case ShapeKind::distinct: return "distinct";
    case ShapeKind::sphere: return "sphere";
  }
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "circle") return ShapeKind::circle;
  if (name == "concentric") return ShapeKind::concentric;
  if (name == "distinct") return ShapeKind::distinct;
  if (name == "sphere") return ShapeKind::sphere;
  throw InvalidArgument("unknown shape kind '" + name + "'");
}

void ShapeSpec::validate() const {
  if (n == 0) throw InvalidArgument("shape needs n >= 1");
  const bool two = kind == ShapeKind::concentric || kind == ShapeKind::distinct;
  if (radii.size() != (two ? 2u : 1u)) {
    throw InvalidArgument(to_string(kind) + " needs " + (two ? "2" : "1") + " radii");
  }
  for (double r : radii) {
    if (!(r > 0.0)) throw InvalidArgument("radii must be positive");
  }
  if (!(separation >= 0.0)) throw InvalidArgument("separation must be nonnegative");
  if (two) {
    if (fractions.size() != 2) throw InvalidArgument("two-circle shapes need 2 fractions");
    for (double f : fractions) {
      if (!(f > 0.0 && f < 1.0)) throw InvalidArgument("fractions must lie in (0,1)");
    }
    if (std::abs(fractions[0] + fractions[1] - 1.0) > 1e-9) {
      throw InvalidArgument("fractions must sum to 1");
    }
  }
  if (kind == ShapeKind::distinct && n % 2 != 0) {
    throw InvalidArgument("distinct circles need an even n, got " + std::to_string(n));
  }
  if (kind == ShapeKind::sphere && sphere_dim != 2 && sphere_dim != 3) {
    throw InvalidArgument("sphere dimension must be 2 or 3");
  }
}

namespace {

void append_circle(std::vector<double>& out, std::size_t n, double radius,
                   std::array<double, 2> center, Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    out.push_back(center[0] + radius * std::cos(angle));
    out.push_back(center[1] + radius * std::sin(angle));
  }
}

}  // namespace

PointCloud sample_circle(std::size_t n, double radius, std::array<double, 2> center,
                         std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_circle: n must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("sample_circle: radius must be positive");
  Rng rng(seed);
  std::vector<double> coords;
  coords.reserve(2 * n);
  append_circle(coords, n, radius, center, rng);
  return PointCloud(2, std::move(coords));
}

PointCloud sample_two_circles(const ShapeSpec& spec) {
  if (spec.kind != ShapeKind::concentric && spec.kind != ShapeKind::distinct) {
    throw InvalidArgument("sample_two_circles: kind must be concentric or distinct, got " +
                          to_string(spec.kind));
  }
  spec.validate();
  Rng rng(spec.seed);
  std::vector<double> coords;
  coords.reserve(2 * spec.n);
  if (spec.kind == ShapeKind::concentric) {
    const auto first = static_cast<std::size_t>(
        std::llround(spec.fractions[0] * static_cast<double>(spec.n)));
    append_circle(coords, first, spec.radii[0], {0.0, 0.0}, rng);
    append_circle(coords, spec.n - first, spec.radii[1], {0.0, 0.0}, rng);
  } else {
    const double offset = spec.radii[0] + spec.radii[1] + spec.separation;
    append_circle(coords, spec.n / 2, spec.radii[0], {0.0, 0.0}, rng);
    append_circle(coords, spec.n / 2, spec.radii[1], {offset, 0.0}, rng);
  }
  return PointCloud(2, std::move(coords));
}

PointCloud sample_sphere(std::size_t n, int sphere_dim, double radius, std::uint64_t seed) {
  if (sphere_dim != 2 && sphere_dim != 3) {
    throw InvalidArgument("sample_sphere: unsupported sphere dimension " +
                          std::to_string(sphere_dim));
  }
  if (n == 0) throw InvalidArgument("sample_sphere: n must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("sample_sphere: radius must be positive");
  const auto ambient = static_cast<std::size_t>(sphere_dim + 1);
  Rng rng(seed);
  std::vector<double> coords;
  coords.reserve(ambient * n);
  std::vector<double> draw(ambient);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    while (norm < 1e-12) {
      double sq = 0.0;
      for (auto& x : draw) {
        x = rng.normal();
        sq += x * x;
      }
      norm = std::sqrt(sq);
    }
    for (double x : draw) coords.push_back(radius * (x / norm));
  }
  return PointCloud(ambient, std::move(coords));
}

PointCloud sample_shape(const ShapeSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ShapeKind::circle: return sample_circle(spec.n, spec.radii[0], {0.0, 0.0}, spec.seed);
    case ShapeKind::concentric:
    case ShapeKind::distinct: return sample_two_circles(spec);
    case ShapeKind::sphere: return sample_sphere(spec.n, spec.sphere_dim, spec.radii[0], spec.seed);
  }
  throw InvalidArgument("unhandled shape kind");
}

void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t j = 0; j < cloud.dim(); ++j) out << (j ? "," : "") << "x" << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud[i];
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << csv::format_double(p[j]);
    out << '\n';
  }
  csv::write_atomic(path, out.str());
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ParseError("missing header", 1);
  const auto header = csv::split(lines[0]);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (csv::trim(header[j]) != "x" + std::to_string(j + 1)) {
      throw ParseError("header must be x1,...,xD", 1);
    }
  }
  const std::size_t dim = header.size();
  std::vector<double> coords;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (csv::trim(lines[l]).empty()) continue;
    const auto fields = csv::split(lines[l]);
    if (fields.size() != dim) {
      throw ParseError("expected " + std::to_string(dim) + " columns", l + 1);
    }
    for (auto f : fields) coords.push_back(csv::parse_double(f, l + 1));
  }
  if (coords.empty()) throw InvalidArgument("point cloud file has no points");
  return PointCloud(dim, std::move(coords));
}

}  // namespace tdarep
