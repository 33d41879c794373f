#include "tdarep/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "tdarep/csv.hpp"
#include "tdarep/error.hpp"

namespace tdarep {

std::string to_string(Orientation orientation) {
  return orientation == Orientation::superlevel ? "superlevel" : "sublevel";
}

Orientation orientation_from_string(const std::string& name) {
  if (name == "superlevel") return Orientation::superlevel;
  if (name == "sublevel") return Orientation::sublevel;
  throw InvalidArgument("unknown orientation '" + name + "'");
}

namespace {

bool valid_pair(const PersistencePair& p, Orientation o) {
  if (!std::isfinite(p.birth) || !std::isfinite(p.death)) return false;
  return o == Orientation::superlevel ? p.birth >= p.death : p.death >= p.birth;
}

std::string describe(const PersistencePair& p) {
  return "(" + csv::format_double(p.birth) + ", " + csv::format_double(p.death) + ")";
}

}  // namespace

void PersistenceDiagram::validate() const {
  if (rank < 0) throw ValidationError("homology rank must be nonnegative");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!valid_pair(pairs[i], convention.direction)) {
      throw ValidationError("pair " + std::to_string(i) + " " + describe(pairs[i]) +
                            " has negative persistence under the " +
                            to_string(convention.direction) + " convention");
    }
  }
}

ProjectedDiagram to_ppd(const PersistenceDiagram& pd) {
  pd.validate();
  ProjectedDiagram ppd;
  ppd.source_rank = pd.rank;
  ppd.orientation = pd.convention.direction;
  ppd.points.reserve(pd.pairs.size());
  for (const auto& p : pd.pairs) {
    if (pd.convention.direction == Orientation::sublevel) {
      ppd.points.push_back({p.birth, p.death - p.birth});
    } else {
      ppd.points.push_back({p.death, p.birth - p.death});
    }
  }
  return ppd;
}

PersistenceDiagram from_ppd(const ProjectedDiagram& ppd) {
  PersistenceDiagram pd;
  pd.rank = ppd.source_rank;
  pd.convention.direction = ppd.orientation;
  pd.pairs.reserve(ppd.points.size());
  for (const auto& x : ppd.points) {
    if (x.x2 < 0.0) throw ValidationError("projected point has negative persistence");
    const double upper = x.x1 + x.x2;
    if (ppd.orientation == Orientation::superlevel) {
      pd.pairs.push_back({upper, x.x1});
    } else {
      pd.pairs.push_back({x.x1, upper});
    }
  }
  return pd;
}

std::string diagrams_to_csv(const std::vector<PersistenceDiagram>& pds) {
  std::ostringstream out;
  const Orientation o = pds.empty() ? Orientation::superlevel : pds.front().convention.direction;
  out << "# orientation=" << to_string(o) << '\n';
  out << "rank,birth,death\n";
  for (const auto& pd : pds) {
    if (pd.convention.direction != o) throw InvalidArgument("mixed orientations in one file");
    for (const auto& p : pd.pairs) {
      out << pd.rank << ',' << csv::format_double(p.birth) << ',' << csv::format_double(p.death)
          << '\n';
    }
  }
  return out.str();
}

void save_diagrams(const std::vector<PersistenceDiagram>& pds, const std::filesystem::path& path) {
  for (const auto& pd : pds) pd.validate();
  csv::write_atomic(path, diagrams_to_csv(pds));
}

void save_diagram(const PersistenceDiagram& pd, const std::filesystem::path& path) {
  save_diagrams({pd}, path);
}

namespace {

struct ParsedDiagrams {
  Orientation orientation;
  std::vector<PersistenceDiagram> diagrams;
};

ParsedDiagrams parse_diagram_file(const std::filesystem::path& path, Orientation fallback) {
  const auto lines = csv::read_lines(path);
  Orientation orientation = fallback;
  std::size_t l = 0;
  for (; l < lines.size(); ++l) {
    const auto line = csv::trim(lines[l]);
    if (line.empty()) continue;
    if (line.front() != '#') break;
    constexpr std::string_view key = "orientation=";
    const auto pos = line.find(key);
    if (pos != std::string_view::npos) {
      try {
        orientation = orientation_from_string(std::string(csv::trim(line.substr(pos + key.size()))));
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), l + 1);
      }
    }
  }
  if (l >= lines.size()) throw ParseError("missing header rank,birth,death", l + 1);
  {
    const auto header = csv::split(lines[l]);
    if (header.size() != 3 || csv::trim(header[0]) != "rank" || csv::trim(header[1]) != "birth" ||
        csv::trim(header[2]) != "death") {
      throw ParseError("header must be rank,birth,death", l + 1);
    }
  }
  std::map<int, PersistenceDiagram> by_rank;
  for (++l; l < lines.size(); ++l) {
    if (csv::trim(lines[l]).empty()) continue;
    const auto fields = csv::split(lines[l]);
    if (fields.size() != 3) throw ParseError("expected 3 columns", l + 1);
    const long rank = csv::parse_long(fields[0], l + 1);
    if (rank < 0) throw ParseError("negative homology rank", l + 1);
    const PersistencePair pair{csv::parse_double(fields[1], l + 1),
                               csv::parse_double(fields[2], l + 1)};
    if (!valid_pair(pair, orientation)) {
      throw ValidationError("line " + std::to_string(l + 1) + ": pair " + describe(pair) +
                            " has negative persistence under the " + to_string(orientation) +
                            " convention");
    }
    auto& pd = by_rank[static_cast<int>(rank)];
    pd.rank = static_cast<int>(rank);
    pd.convention.direction = orientation;
    pd.pairs.push_back(pair);
  }
  ParsedDiagrams parsed{orientation, {}};
  for (auto& [rank, pd] : by_rank) parsed.diagrams.push_back(std::move(pd));
  return parsed;
}

}  // namespace

std::vector<PersistenceDiagram> load_diagrams(const std::filesystem::path& path,
                                              Orientation fallback) {
  return parse_diagram_file(path, fallback).diagrams;
}

PersistenceDiagram load_diagram(const std::filesystem::path& path, Orientation fallback) {
  auto parsed = parse_diagram_file(path, fallback);
  if (parsed.diagrams.size() > 1) {
    throw ValidationError(path.string() + " holds several homology ranks; use load_diagrams");
  }
  if (parsed.diagrams.empty()) {
    PersistenceDiagram empty;
    empty.convention.direction = parsed.orientation;
    return empty;
  }
  return std::move(parsed.diagrams.front());
}

void save_ppd(const ProjectedDiagram& ppd, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "x1,x2,rank\n";
  for (const auto& x : ppd.points) {
    if (x.x2 < 0.0) throw ValidationError("projected point has negative persistence");
    out << csv::format_double(x.x1) << ',' << csv::format_double(x.x2) << ',' << ppd.source_rank
        << '\n';
  }
  csv::write_atomic(path, out.str());
}

ProjectedDiagram load_ppd(const std::filesystem::path& path, Orientation orientation) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ParseError("missing header x1,x2,rank", 1);
  const auto header = csv::split(lines[0]);
  if (header.size() != 3 || csv::trim(header[0]) != "x1" || csv::trim(header[1]) != "x2" ||
      csv::trim(header[2]) != "rank") {
    throw ParseError("header must be x1,x2,rank", 1);
  }
  ProjectedDiagram ppd;
  ppd.orientation = orientation;
  bool have_rank = false;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (csv::trim(lines[l]).empty()) continue;
    const auto fields = csv::split(lines[l]);
    if (fields.size() != 3) throw ParseError("expected 3 columns", l + 1);
    const PpdPoint x{csv::parse_double(fields[0], l + 1), csv::parse_double(fields[1], l + 1)};
    if (x.x2 < 0.0) throw ValidationError("line " + std::to_string(l + 1) + ": x2 < 0");
    const int rank = static_cast<int>(csv::parse_long(fields[2], l + 1));
    if (have_rank && rank != ppd.source_rank) throw ParseError("mixed ranks in PPD file", l + 1);
    ppd.source_rank = rank;
    have_rank = true;
    ppd.points.push_back(x);
  }
  return ppd;
}

}  // namespace tdarep
