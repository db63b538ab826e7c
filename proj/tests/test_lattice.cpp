#include <doctest.h>

#include <set>
#include <stdexcept>

#include "bandlab/lattice.hpp"

using namespace bandlab;

TEST_CASE("periodic distance examples") {
  CHECK(periodic_distance({0, 0}, {7, 0}, 8) == 1);
  CHECK(periodic_distance({1, 2}, {4, 6}, 8) == 7);
  for (int L = 3; L <= 8; ++L) CHECK(periodic_distance({2, 1}, {2, 1}, L) == 0);
}

TEST_CASE("periodic distance is a metric") {
  for (int L = 3; L <= 8; ++L) {
    std::vector<BlockIndex> all;
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) all.push_back({i, j});
    for (const auto& a : all)
      for (const auto& b : all) {
        const int dab = periodic_distance(a, b, L);
        REQUIRE(dab == periodic_distance(b, a, L));
        REQUIRE((dab == 0) == (a == b));
        for (const auto& c : all) REQUIRE(periodic_distance(a, c, L) <= dab + periodic_distance(b, c, L));
      }
  }
}

TEST_CASE("block_of examples") {
  const BlockGeometry g4(4, 4);
  CHECK(block_of({5, 2}, g4) == BlockIndex{1, 0});
  CHECK(block_of({0, 0}, g4) == BlockIndex{0, 0});
  CHECK(block_of({15, 15}, g4) == BlockIndex{3, 3});
}

TEST_CASE("block_sites tiles the site lattice") {
  const BlockGeometry g1(1, 3);
  CHECK(block_sites({2, 1}, g1) == std::vector<SiteIndex>{{2, 1}});
  const BlockGeometry g2(2, 3);
  CHECK(block_sites({0, 0}, g2) == std::vector<SiteIndex>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});

  const BlockGeometry g(3, 4);
  std::set<std::size_t> seen;
  for (std::size_t b = 0; b < g.block_count(); ++b) {
    const auto a = g.block(b);
    const auto sites = block_sites(a, g);
    REQUIRE(sites.size() == g.block_size());
    for (const auto& x : sites) {
      CHECK(block_of(x, g) == a);
      CHECK(g.block_of_flat(g.flat(x)) == b);
      CHECK(seen.insert(g.flat(x)).second);
    }
  }
  CHECK(seen.size() == g.N());
}

TEST_CASE("geometry preconditions") {
  CHECK_THROWS_AS(BlockGeometry(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(BlockGeometry(4, 2), std::invalid_argument);
  const BlockGeometry g(4, 3);
  CHECK(g.N() == 144);
  CHECK(g.site(g.flat(SiteIndex{7, 11})) == SiteIndex{7, 11});
}
