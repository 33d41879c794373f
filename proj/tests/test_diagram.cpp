#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tdarep/diagram.hpp"
#include "tdarep/error.hpp"
#include "tdarep/random.hpp"

using namespace tdarep;

namespace {

PersistenceDiagram random_diagram(Rng& rng, Orientation o, int rank) {
  PersistenceDiagram pd;
  pd.rank = rank;
  pd.convention.direction = o;
  const auto n = 1 + static_cast<int>(rng.next_u64() % 30);
  for (int i = 0; i < n; ++i) {
    const double low = rng.uniform(-3, 3);
    const double len = (i % 7 == 0) ? 0.0 : rng.uniform(0, 2);
    if (o == Orientation::superlevel) {
      pd.pairs.push_back({low + len, low});
    } else {
      pd.pairs.push_back({low, low + len});
    }
  }
  return pd;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("projection of sublevel diagrams") {
  PersistenceDiagram pd;
  pd.convention.direction = Orientation::sublevel;
  pd.pairs = {{2.0, 5.0}};
  const auto ppd = to_ppd(pd);
  REQUIRE(ppd.size() == 1);
  CHECK(ppd.points[0] == PpdPoint{2.0, 3.0});

  pd.pairs = {{1.0, 1.0}};
  CHECK(to_ppd(pd).points[0] == PpdPoint{1.0, 0.0});

  pd.pairs.clear();
  CHECK(to_ppd(pd).points.empty());
}

TEST_CASE("back-mapping emits (x1 + x2, x1)") {
  ProjectedDiagram ppd;
  ppd.orientation = Orientation::superlevel;
  ppd.points = {{2.0, 3.0}};
  const auto pd = from_ppd(ppd);
  REQUIRE(pd.size() == 1);
  CHECK(pd.pairs[0].birth == 5.0);
  CHECK(pd.pairs[0].death == 2.0);

  // Sublevel: the same tuple (5, 2) read as (death, birth).
  ppd.orientation = Orientation::sublevel;
  const auto sub = from_ppd(ppd);
  CHECK(sub.pairs[0].birth == 2.0);
  CHECK(sub.pairs[0].death == 5.0);

  ppd.points = {{1.0, 0.0}};
  CHECK(from_ppd(ppd).pairs[0] == PersistencePair{1.0, 1.0});
}

TEST_CASE("superlevel projection uses the lower end of the bar") {
  PersistenceDiagram pd;
  pd.convention.direction = Orientation::superlevel;
  pd.pairs = {{0.75, 0.25}};
  const auto ppd = to_ppd(pd);
  CHECK(ppd.points[0] == PpdPoint{0.25, 0.5});
  CHECK(from_ppd(ppd) == pd);
}

TEST_CASE("projection roundtrip is the identity") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto o : {Orientation::superlevel, Orientation::sublevel}) {
      const auto pd = random_diagram(rng, o, trial % 3);
      const auto ppd = to_ppd(pd);
      CHECK(ppd.size() == pd.size());
      for (const auto& x : ppd.points) CHECK(x.x2 >= 0.0);
      const auto back = from_ppd(ppd);
      REQUIRE(back.size() == pd.size());
      for (std::size_t i = 0; i < pd.size(); ++i) {
        CHECK(back.pairs[i].birth == doctest::Approx(pd.pairs[i].birth).epsilon(1e-14));
        CHECK(back.pairs[i].death == doctest::Approx(pd.pairs[i].death).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("negative persistence is an error, not a clamp") {
  PersistenceDiagram pd;
  pd.convention.direction = Orientation::superlevel;
  pd.pairs = {{1.0, 2.0}};
  CHECK_THROWS_AS(to_ppd(pd), ValidationError);
  ProjectedDiagram ppd;
  ppd.points = {{0.0, -0.1}};
  CHECK_THROWS_AS(from_ppd(ppd), ValidationError);
}

TEST_CASE("diagram csv roundtrip is value exact") {
  Rng rng(5);
  const auto path = temp_file("tdarep_pd.csv");
  for (int trial = 0; trial < 100; ++trial) {
    const auto o = trial % 2 ? Orientation::superlevel : Orientation::sublevel;
    auto pd = random_diagram(rng, o, trial % 3);
    save_diagram(pd, path);
    const auto back = load_diagram(path, o == Orientation::superlevel ? Orientation::sublevel
                                                                       : Orientation::superlevel);
    CHECK(back == pd);
  }
  std::filesystem::remove(path);
}

TEST_CASE("diagram csv validation and parse errors") {
  const auto path = temp_file("tdarep_bad.csv");
  {
    std::ofstream out(path);
    out << "rank,birth,death\n0,3,1\n";
  }
  CHECK_THROWS_AS(load_diagram(path, Orientation::sublevel), ValidationError);
  CHECK(load_diagram(path, Orientation::superlevel).pairs.size() == 1);

  {
    std::ofstream out(path);
    out << "rank,birth,death\n0,1,0.5\n0,abc,0\n";
  }
  try {
    load_diagram(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  {
    std::ofstream out(path);
    out << "rank,birth,death\n";
  }
  CHECK(load_diagram(path).empty());

  {
    std::ofstream out(path);
    out << "rank,birth,death\n0,1,0.5\n1,2\n";
  }
  CHECK_THROWS_AS(load_diagram(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("multi-rank files and ppd files") {
  Rng rng(8);
  std::vector<PersistenceDiagram> pds;
  for (int rank = 0; rank < 3; ++rank) {
    auto pd = random_diagram(rng, Orientation::superlevel, rank);
    if (pd.empty()) pd.pairs.push_back({1.0, 0.0});
    pds.push_back(pd);
  }
  const auto path = temp_file("tdarep_multi.csv");
  save_diagrams(pds, path);
  CHECK(load_diagrams(path) == pds);
  CHECK_THROWS_AS(load_diagram(path), ValidationError);

  const auto ppd = to_ppd(pds[1]);
  save_ppd(ppd, path);
  CHECK(load_ppd(path) == ppd);
  std::filesystem::remove(path);
}
