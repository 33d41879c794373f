#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tdarep {

// n points in R^dim, stored row-major.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<double>& coords() const noexcept { return coords_; }

  void append(std::span<const double> point);

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

enum class ShapeKind { circle, concentric, distinct, sphere };

std::string to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

struct ShapeSpec {
  ShapeKind kind = ShapeKind::circle;
  std::vector<double> radii{1.0};
  double separation = 0.0;            // gap between the two circles (distinct)
  std::vector<double> fractions{1.0};  // share of n per component
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  int sphere_dim = 2;  // S^2 in R^3 or S^3 in R^4

  // Throws InvalidArgument if the fields are inconsistent with `kind`.
  void validate() const;
};

PointCloud sample_circle(std::size_t n, double radius, std::array<double, 2> center,
                         std::uint64_t seed);

// Concentric: round(fractions[0] * n) points on radii[0], the rest on radii[1],
// both centred at the origin. Distinct: n/2 per circle (n must be even), the
// first circle at the origin and the second on the positive x-axis so that the
// gap between the curves equals `separation`.
PointCloud sample_two_circles(const ShapeSpec& spec);

PointCloud sample_sphere(std::size_t n, int sphere_dim, double radius, std::uint64_t seed);

PointCloud sample_shape(const ShapeSpec& spec);

// CSV with header x1,...,xD and one point per row.
void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud load_point_cloud(const std::filesystem::path& path);

}  // namespace tdarep
