#pragma once

#include <cstddef>
#include <vector>

#include "tdarep/diagram.hpp"
#include "tdarep/kde.hpp"

namespace tdarep {

struct CubicalOptions {
  // Upper bound on the number of cells of the full cubical grid.
  std::size_t max_cells = 10'000'000;
  // Skip columns already known to reduce to zero (twist optimization).
  bool clearing = true;
};

// Connected components of the superlevel sets {f >= t}, by a descending
// union-find sweep with face adjacency and the elder rule. Pairs of zero
// persistence are not reported; the oldest component dies at min(f).
// Pairs are sorted by birth, then death, both descending.
PersistenceDiagram h0_superlevel(const ScalarField& field);

// Superlevel persistence of the vertex-valued cubical complex on the grid
// (a cube enters at the minimum of its vertex values), ranks 0..max_rank.
// Requires 1 <= max_rank <= dim - 1 and dim <= 4.
std::vector<PersistenceDiagram> cubical_persistence(const ScalarField& field, int max_rank,
                                                    const CubicalOptions& options = {});

// Sorts pairs by birth, then death, both descending.
void canonicalize(PersistenceDiagram& pd);

}  // namespace tdarep
