#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdarep/diagram.hpp"

namespace tdarep {

// Distances between diagrams with diagonal augmentation and the L-infinity
// ground metric. A point (b, d) sits |d - b| / 2 from the diagonal.
double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b);
double wasserstein(const PersistenceDiagram& a, const PersistenceDiagram& b, double p = 1.0);

enum class NnSpace { diagram, projected };

std::string to_string(NnSpace space);
NnSpace nn_space_from_string(const std::string& name);

// Mean distance to the k-th nearest other point, for each k in `orders`.
// Euclidean in (birth, death) or, with NnSpace::projected, in PPD coordinates.
std::vector<double> nn_stats(const PersistenceDiagram& pd, const std::vector<int>& orders = {1, 2, 3},
                             NnSpace space = NnSpace::diagram);

struct GofTags {
  std::string variant;
  std::size_t grid_size = 0;
  std::size_t burn_in = 0;
  int rank = 0;

  friend bool operator==(const GofTags&, const GofTags&) = default;
};

struct GofOptions {
  double p = 1.0;
  std::vector<int> orders{1, 2, 3};
  NnSpace space = NnSpace::diagram;
};

struct GofRow {
  std::size_t replicate = 0;
  double bottleneck = 0.0;
  double wasserstein = 0.0;
};

struct GofReport {
  GofTags tags;
  GofOptions options;
  std::vector<GofRow> rows;
  // Per diagram, one mean per order; NaN where a diagram has too few points.
  std::vector<std::vector<double>> nn_real;
  std::vector<std::vector<double>> nn_sim;
};

GofReport gof_report(const std::vector<PersistenceDiagram>& real, const std::vector<PersistenceDiagram>& sim,
                     const GofTags& tags, const GofOptions& options = {});

// Long format: replicate,metric,value,variant,grid_size,burn_in,rank.
std::string gof_csv_header();
std::string gof_to_csv_rows(const GofReport& report);

void to_json(nlohmann::json& j, const GofReport& r);

}  // namespace tdarep
