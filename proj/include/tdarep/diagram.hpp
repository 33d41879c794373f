#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace tdarep {

// superlevel: features are born at high values and die lower (birth >= death).
// sublevel:   the usual orientation (birth <= death).
enum class Orientation { superlevel, sublevel };

std::string to_string(Orientation orientation);
Orientation orientation_from_string(const std::string& name);

struct FiltrationConvention {
  Orientation direction = Orientation::superlevel;
  // The surviving class is closed off at the global minimum of the field
  // rather than at -infinity, so every pair has finite coordinates.
  bool essential_death_at_min = true;

  friend bool operator==(const FiltrationConvention&, const FiltrationConvention&) = default;
};

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;

  double persistence() const noexcept { return birth > death ? birth - death : death - birth; }
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceDiagram {
  int rank = 0;
  std::vector<PersistencePair> pairs;
  FiltrationConvention convention{};

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }

  // Throws ValidationError on negative persistence under the convention.
  void validate() const;

  friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;
};

// Point of the projected diagram: x1 is the lower end of the bar and x2 >= 0
// its length. For sublevel diagrams x1 is the birth; for superlevel diagrams
// the lower end is the death, so mapping back as (x1 + x2, x1) gives
// (birth, death) directly.
struct PpdPoint {
  double x1 = 0.0;
  double x2 = 0.0;

  friend bool operator==(const PpdPoint&, const PpdPoint&) = default;
};

struct ProjectedDiagram {
  std::vector<PpdPoint> points;
  int source_rank = 0;
  Orientation orientation = Orientation::superlevel;

  std::size_t size() const noexcept { return points.size(); }

  friend bool operator==(const ProjectedDiagram&, const ProjectedDiagram&) = default;
};

ProjectedDiagram to_ppd(const PersistenceDiagram& pd);
PersistenceDiagram from_ppd(const ProjectedDiagram& ppd);

// CSV with columns rank,birth,death. save writes a leading
// "# orientation=<name>" comment; load honours it when present and otherwise
// uses `fallback`. Rows must share one rank.
void save_diagram(const PersistenceDiagram& pd, const std::filesystem::path& path);
PersistenceDiagram load_diagram(const std::filesystem::path& path,
                                Orientation fallback = Orientation::superlevel);

// Several ranks in one file, grouped by rank in ascending order.
void save_diagrams(const std::vector<PersistenceDiagram>& pds, const std::filesystem::path& path);
std::vector<PersistenceDiagram> load_diagrams(const std::filesystem::path& path,
                                              Orientation fallback = Orientation::superlevel);

// CSV with columns x1,x2,rank.
void save_ppd(const ProjectedDiagram& ppd, const std::filesystem::path& path);
ProjectedDiagram load_ppd(const std::filesystem::path& path,
                          Orientation orientation = Orientation::superlevel);

std::string diagrams_to_csv(const std::vector<PersistenceDiagram>& pds);

}  // namespace tdarep
