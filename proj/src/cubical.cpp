#include "tdarep/cubical.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "tdarep/error.hpp"

namespace tdarep {

void canonicalize(PersistenceDiagram& pd) {
  std::sort(pd.pairs.begin(), pd.pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
    if (a.birth != b.birth) return a.birth > b.birth;
    return a.death > b.death;
  });
}

namespace {

void check_field(const ScalarField& field) {
  if (field.values.empty() || field.axes.empty()) throw InvalidArgument("empty scalar field");
  std::size_t total = 1;
  for (const auto& axis : field.axes) total *= axis.size();
  if (total != field.values.size()) throw InvalidArgument("field values do not match axes");
}

// Vertices sorted by value descending, ties by index ascending.
std::vector<std::uint32_t> descending_order(const std::vector<double>& values) {
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  return order;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    std::uint32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::uint32_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void attach(std::uint32_t child_root, std::uint32_t parent_root) { parent_[child_root] = parent_root; }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

PersistenceDiagram h0_superlevel(const ScalarField& field) {
  check_field(field);
  const auto shape = field.shape();
  const std::size_t dim = shape.size();
  std::vector<std::size_t> stride(dim, 1);
  for (std::size_t j = dim - 1; j-- > 0;) stride[j] = stride[j + 1] * shape[j + 1];

  const auto& f = field.values;
  const auto order = descending_order(f);
  std::vector<std::uint32_t> rank_of(f.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r;

  DisjointSets sets(f.size());
  // Root -> vertex where its component was born (earliest in the sweep).
  std::vector<std::uint32_t> birth_vertex(f.size());
  std::vector<bool> active(f.size(), false);
  PersistenceDiagram pd;
  pd.rank = 0;

  for (const std::uint32_t v : order) {
    active[v] = true;
    birth_vertex[v] = v;
    std::size_t rest = v;
    for (std::size_t j = dim; j-- > 0;) {
      const std::size_t coord = rest % shape[j];
      rest /= shape[j];
      for (int side = 0; side < 2; ++side) {
        if (side == 0 && coord == 0) continue;
        if (side == 1 && coord + 1 == shape[j]) continue;
        const std::size_t u = side == 0 ? v - stride[j] : v + stride[j];
        if (!active[u]) continue;
        std::uint32_t a = sets.find(v);
        std::uint32_t b = sets.find(static_cast<std::uint32_t>(u));
        if (a == b) continue;
        // Elder rule: the component born later in the sweep dies here.
        if (rank_of[birth_vertex[a]] < rank_of[birth_vertex[b]]) std::swap(a, b);
        const double birth = f[birth_vertex[a]];
        if (birth != f[v]) pd.pairs.push_back({birth, f[v]});
        sets.attach(a, b);
      }
    }
  }
  const double global_min = f[order.back()];
  pd.pairs.push_back({f[order.front()], global_min});
  canonicalize(pd);
  return pd;
}

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// Z/2 column stored as strictly decreasing filtration positions; front() is the pivot.
using Column = std::vector<std::uint32_t>;

void add_into(Column& target, const Column& source, Column& scratch) {
  scratch.clear();
  auto a = target.begin();
  auto b = source.begin();
  while (a != target.end() && b != source.end()) {
    if (*a > *b) {
      scratch.push_back(*a++);
    } else if (*b > *a) {
      scratch.push_back(*b++);
    } else {
      ++a;
      ++b;
    }
  }
  scratch.insert(scratch.end(), a, target.end());
  scratch.insert(scratch.end(), b, source.end());
  target.swap(scratch);
}

}  // namespace

std::vector<PersistenceDiagram> cubical_persistence(const ScalarField& field, int max_rank,
                                                    const CubicalOptions& options) {
  check_field(field);
  const auto shape = field.shape();
  const std::size_t dim = shape.size();
  if (dim > 4) throw InvalidArgument("cubical persistence supports at most 4 dimensions");
  if (max_rank < 1 || static_cast<std::size_t>(max_rank) > dim - 1) {
    throw InvalidArgument("max_rank must lie in [1, " + std::to_string(dim - 1) + "], got " +
                          std::to_string(max_rank));
  }

  // Cells live on the doubled grid: coordinate 2i is vertex i, 2i+1 the edge
  // between vertices i and i+1. A cell's dimension is its count of odd coordinates.
  std::vector<std::size_t> extent(dim);
  std::size_t total = 1;
  for (std::size_t j = 0; j < dim; ++j) {
    extent[j] = 2 * shape[j] - 1;
    if (total > options.max_cells / extent[j] + 1) {
      total = options.max_cells + 1;
      break;
    }
    total *= extent[j];
  }
  if (total > options.max_cells || total >= kNone) {
    std::string dims;
    for (std::size_t j = 0; j < dim; ++j) dims += (j ? "x" : "") + std::to_string(shape[j]);
    throw ResourceError("cubical complex for a " + dims + " grid needs more than " +
                        std::to_string(options.max_cells) + " cells (budget exceeded)");
  }
  std::vector<std::size_t> stride(dim, 1);
  std::vector<std::size_t> vstride(dim, 1);
  for (std::size_t j = dim - 1; j-- > 0;) {
    stride[j] = stride[j + 1] * extent[j + 1];
    vstride[j] = vstride[j + 1] * shape[j + 1];
  }

  const auto top = static_cast<std::uint8_t>(max_rank + 1);
  std::vector<std::uint8_t> cell_dim(total);
  std::vector<std::uint8_t> first_odd(total);
  std::vector<double> value(total, 0.0);
  {
    std::vector<std::size_t> coord(dim, 0);
    for (std::size_t c = 0; c < total; ++c) {
      std::uint8_t d = 0;
      std::uint8_t odd = 0xff;
      std::size_t vertex = 0;
      for (std::size_t j = 0; j < dim; ++j) {
        if (coord[j] & 1u) {
          if (odd == 0xff) odd = static_cast<std::uint8_t>(j);
          ++d;
        } else {
          vertex += (coord[j] / 2) * vstride[j];
        }
      }
      cell_dim[c] = d;
      first_odd[c] = odd;
      if (d == 0) value[c] = field.values[vertex];
      for (std::size_t j = dim; j-- > 0;) {
        if (++coord[j] < extent[j]) break;
        coord[j] = 0;
      }
    }
  }
  for (std::uint8_t d = 1; d <= top; ++d) {
    for (std::size_t c = 0; c < total; ++c) {
      if (cell_dim[c] != d) continue;
      const std::size_t s = stride[first_odd[c]];
      value[c] = std::min(value[c - s], value[c + s]);
    }
  }

  // Filtration order of -f: value descending, then dimension, then index.
  std::vector<std::uint32_t> cells;
  for (std::size_t c = 0; c < total; ++c) {
    if (cell_dim[c] <= top) cells.push_back(static_cast<std::uint32_t>(c));
  }
  std::sort(cells.begin(), cells.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (value[a] != value[b]) return value[a] > value[b];
    if (cell_dim[a] != cell_dim[b]) return cell_dim[a] < cell_dim[b];
    return a < b;
  });
  std::vector<std::uint32_t> position(total, kNone);
  for (std::uint32_t p = 0; p < cells.size(); ++p) position[cells[p]] = p;

  const double global_min = *std::min_element(field.values.begin(), field.values.end());
  std::vector<PersistenceDiagram> diagrams(static_cast<std::size_t>(max_rank) + 1);
  for (int k = 0; k <= max_rank; ++k) diagrams[static_cast<std::size_t>(k)].rank = k;

  // pivot position -> position of the column that owns it
  std::vector<std::uint32_t> owner(cells.size(), kNone);
  std::vector<Column> reduced(cells.size());
  std::vector<bool> is_pivot(cells.size(), false);
  std::vector<bool> negative(cells.size(), false);
  Column column;
  Column scratch;

  for (std::uint8_t d = top; d >= 1; --d) {
    for (std::uint32_t p = 0; p < cells.size(); ++p) {
      const std::uint32_t c = cells[p];
      if (cell_dim[c] != d) continue;
      if (options.clearing && is_pivot[p]) continue;

      column.clear();
      std::size_t rest = c;
      for (std::size_t j = dim; j-- > 0;) {
        const std::size_t coord = rest % extent[j];
        rest /= extent[j];
        if (coord & 1u) {
          column.push_back(position[c - stride[j]]);
          column.push_back(position[c + stride[j]]);
        }
      }
      std::sort(column.begin(), column.end(), std::greater<>());

      while (!column.empty() && owner[column.front()] != kNone) {
        add_into(column, reduced[owner[column.front()]], scratch);
      }
      if (column.empty()) continue;

      const std::uint32_t pivot = column.front();
      owner[pivot] = p;
      is_pivot[pivot] = true;
      negative[p] = true;
      const double birth = value[cells[pivot]];
      const double death = value[c];
      if (birth != death) {
        diagrams[static_cast<std::size_t>(d - 1)].pairs.push_back({birth, death});
      }
      reduced[p] = column;
    }
  }

  // Creators that were never paired survive to the end of the filtration.
  for (std::uint32_t p = 0; p < cells.size(); ++p) {
    const std::uint8_t d = cell_dim[cells[p]];
    if (d > max_rank || negative[p] || is_pivot[p]) continue;
    diagrams[d].pairs.push_back({value[cells[p]], global_min});
  }
  for (auto& pd : diagrams) canonicalize(pd);
  return diagrams;
}

}  // namespace tdarep
