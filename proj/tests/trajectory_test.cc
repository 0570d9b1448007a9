#include <cmath>
#include <limits>

#include "doctest.h"
#include "trajprune/errors.h"
#include "trajprune/rng.h"
#include "trajprune/trajectory.h"

using namespace trajprune;

namespace {

bool IsCell(const CellIndex& a, std::int32_t ix, std::int32_t iy,
                 std::int32_t ia) {
  return a.ix == ix && a.iy == iy && a.ia == ia;
}

}  // namespace

TEST_CASE("CellIndexOf examples") {
  const GridSpec half{0.5, 0};
  CHECK(IsCell(CellIndexOf({0.0, 0.0, 0.0}, half), 0, 0, 0));
  CHECK(IsCell(CellIndexOf({1.25, -0.3, 0.0}, half), 2, -1, 0));

  const GridSpec unit8{1.0, 8};
  CHECK(IsCell(CellIndexOf({0.0, 0.0, kPi - 1e-9}, unit8), 0, 0, 7));
}

TEST_CASE("heading bins cover [-pi, pi) and clamp the upper edge") {
  const GridSpec g{1.0, 8};
  CHECK(CellIndexOf({0, 0, -kPi}, g).ia == 0);
  CHECK(CellIndexOf({0, 0, 0.0}, g).ia == 4);
  CHECK(CellIndexOf({0, 0, std::nextafter(kPi, 0.0)}, g).ia == 7);
  // Exactly pi wraps to -pi.
  CHECK(CellIndexOf({0, 0, kPi}, g).ia == 0);
  CHECK(CellIndexOf({0, 0, 3.0 * kPi / 2.0}, g).ia == CellIndexOf({0, 0, -kPi / 2.0}, g).ia);
}

TEST_CASE("non-finite coordinates are rejected with the field name") {
  const GridSpec g;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(CellIndexOf({nan, 0, 0}, g), doctest::Contains("x"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(CellIndexOf({0, inf, 0}, g), doctest::Contains("y"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(CellIndexOf({0, 0, nan}, g),
                       doctest::Contains("heading"), ValidationError);
  CHECK_THROWS_AS(CellIndexOf({1e300, 0, 0}, g), ValidationError);
}

TEST_CASE("Discretize") {
  const GridSpec g{0.5, 0};
  SUBCASE("stationary trajectory maps to one cell with multiplicity") {
    Trajectory t{"s", std::vector<Waypoint>(5)};
    const auto cells = Discretize(t, g);
    REQUIRE(cells.size() == 5);
    for (const auto& c : cells) CHECK(IsCell(c, 0, 0, 0));
  }
  SUBCASE("per-point floor") {
    Trajectory t{"x", {{0.0, 0, 0}, {0.6, 0, 0}, {1.2, 0, 0}}};
    const auto cells = Discretize(t, g);
    REQUIRE(cells.size() == 3);
    CHECK(IsCell(cells[0], 0, 0, 0));
    CHECK(IsCell(cells[1], 1, 0, 0));
    CHECK(IsCell(cells[2], 2, 0, 0));
  }
  SUBCASE("empty trajectory") {
    CHECK_THROWS_AS(Discretize(Trajectory{"e", {}}, g), ValidationError);
  }
}

TEST_CASE("cell index properties on random waypoints") {
  Xoshiro256 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const double cell = rng.Uniform(0.05, 3.0);
    const Waypoint w{rng.Uniform(-200, 200), rng.Uniform(-200, 200),
                     rng.Uniform(-kPi, kPi)};
    const double frac = w.x / cell - std::floor(w.x / cell);
    const GridSpec flat{cell, 0};
    const CellIndex a = CellIndexOf(w, flat);
    CHECK(a.ia == 0);
    // Translation by one cell, away from boundaries.
    if (frac > 1e-6 && frac < 1 - 1e-6) {
      const CellIndex b = CellIndexOf({w.x + cell, w.y, w.heading}, flat);
      CHECK(b.ix == a.ix + 1);
      CHECK(b.iy == a.iy);
    }
    const int bins = 1 + static_cast<int>(rng.Below(16));
    const CellIndex h = CellIndexOf(w, GridSpec{cell, bins});
    CHECK(h.ia >= 0);
    CHECK(h.ia < bins);
  }
}

TEST_CASE("NormalizeHeading") {
  CHECK(NormalizeHeading(0.25) == 0.25);
  CHECK(NormalizeHeading(-kPi) == -kPi);
  CHECK(NormalizeHeading(kPi) == doctest::Approx(-kPi));
  CHECK(NormalizeHeading(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(NormalizeHeading(-5 * kPi / 2) == doctest::Approx(-kPi / 2));
  Xoshiro256 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double h = NormalizeHeading(rng.Uniform(-100, 100));
    CHECK(h >= -kPi);
    CHECK(h < kPi);
    CHECK(NormalizeHeading(h) == h);
  }
}

TEST_CASE("validation helpers") {
  CHECK_THROWS_AS(ValidateGrid({0.0, 0}), ValidationError);
  CHECK_THROWS_AS(ValidateGrid({-1.0, 0}), ValidationError);
  CHECK_THROWS_AS(ValidateGrid({1.0, -1}), ValidationError);
  CHECK_NOTHROW(ValidateGrid({0.5, 0}));

  Trajectory bad{"t7", {{0, 0, 0}, {1, std::nan(""), 0}}};
  CHECK_THROWS_WITH_AS(ValidateTrajectory(bad),
                       doctest::Contains("'t7' point 1: field y"),
                       ValidationError);

  CHECK(StartsAtOrigin(Trajectory{"o", {{0, 0, 0}, {1, 0, 0}}}));
  CHECK_FALSE(StartsAtOrigin(Trajectory{"p", {{0.1, 0, 0}}}));
}
