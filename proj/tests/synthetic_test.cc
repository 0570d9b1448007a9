#include <cmath>
#include <map>

#include "doctest.h"
#include "trajprune/errors.h"
#include "trajprune/synthetic.h"

using namespace trajprune;

namespace {

std::map<Motion, int> Tally(const std::vector<Trajectory>& data) {
  std::map<Motion, int> counts;
  for (const auto& t : data) ++counts[*MotionFromId(t.id)];
  return counts;
}

}  // namespace

TEST_CASE("stationary trajectories stay near the origin") {
  SyntheticSpec spec;
  spec.count = 10;
  spec.mix = {1.0, 0.0, 0.0, 0.0};
  spec.noise_std = 0.2;
  const auto data = GenerateSynthetic(spec);
  REQUIRE(data.size() == 10);
  for (const auto& t : data) {
    CHECK(StartsAtOrigin(t));
    for (const auto& w : t.points) {
      CHECK(std::hypot(w.x, w.y) <= 3 * spec.noise_std);
    }
  }
}

TEST_CASE("category counts are exact") {
  SyntheticSpec spec;
  spec.count = 100;
  spec.mix = {0.0, 0.9, 0.1, 0.0};
  const auto tally = Tally(GenerateSynthetic(spec));
  CHECK(tally.at(Motion::kStraight) == 90);
  CHECK(tally.at(Motion::kLeftTurn) == 10);
  CHECK_FALSE(tally.contains(Motion::kStationary));

  // 7 * {0.4, 0.5, 0.05, 0.05} = {2.8, 3.5, 0.35, 0.35}: floors {2, 3, 0, 0},
  // the remaining 2 go to the largest remainders 0.8 and 0.5.
  CHECK(CategoryCounts(7, {0.4, 0.5, 0.05, 0.05}) ==
        std::array<std::size_t, 4>{3, 4, 0, 0});
  CHECK(CategoryCounts(100000, {0.4, 0.5, 0.05, 0.05}) ==
        std::array<std::size_t, 4>{40000, 50000, 5000, 5000});
}

TEST_CASE("straight motion follows the kinematic closed form") {
  SyntheticSpec spec;
  spec.count = 1;
  spec.mix = {0.0, 1.0, 0.0, 0.0};
  spec.noise_std = 0.0;
  spec.speed_min = spec.speed_max = 10.0;
  spec.time_step = 0.1;
  spec.points_per_trajectory = 5;
  const auto data = GenerateSynthetic(spec);
  REQUIRE(data[0].points.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(data[0].points[k].x == doctest::Approx(k).epsilon(1e-12));
    CHECK(data[0].points[k].y == 0.0);
  }
}

TEST_CASE("turns bend to the correct side with tangent headings") {
  SyntheticSpec spec;
  spec.count = 2;
  spec.mix = {0.0, 0.0, 0.5, 0.5};
  spec.noise_std = 0.0;
  spec.speed_min = spec.speed_max = 5.0;
  spec.turn_radius_min = spec.turn_radius_max = 20.0;
  for (const auto& t : GenerateSynthetic(spec)) {
    const double side = *MotionFromId(t.id) == Motion::kLeftTurn ? 1.0 : -1.0;
    for (std::size_t k = 1; k < t.points.size(); ++k) {
      const auto& w = t.points[k];
      CHECK(side * w.y > 0.0);
      // On the circle centered at (0, side * R).
      CHECK(std::hypot(w.x, w.y - side * 20.0) ==
            doctest::Approx(20.0).epsilon(1e-9));
      const double theta = 5.0 * spec.time_step * k / 20.0;
      CHECK(w.heading == doctest::Approx(NormalizeHeading(side * theta)));
    }
  }
}

TEST_CASE("generation is deterministic per seed and produces valid data") {
  SyntheticSpec spec;
  spec.count = 500;
  spec.seed = 5;
  const auto a = GenerateSynthetic(spec);
  CHECK(a == GenerateSynthetic(spec));
  spec.seed = 6;
  CHECK(a != GenerateSynthetic(spec));
  for (const auto& t : a) {
    CHECK_NOTHROW(ValidateTrajectory(t));
    CHECK(MotionFromId(t.id).has_value());
    for (const auto& w : t.points) {
      CHECK(w.heading >= -kPi);
      CHECK(w.heading < kPi);
    }
  }
}

TEST_CASE("mix parsing and validation") {
  const auto mix = ParseMix("stationary=0.4,straight=0.5,turns=0.1");
  CHECK(mix[0] == 0.4);
  CHECK(mix[1] == 0.5);
  CHECK(mix[2] == doctest::Approx(0.05));
  CHECK(mix[3] == doctest::Approx(0.05));
  CHECK_THROWS_AS(ParseMix("flying=1"), ConfigError);
  CHECK_THROWS_AS(ParseMix("straight"), ConfigError);
  CHECK_THROWS_AS(ParseMix("straight=abc"), ConfigError);

  SyntheticSpec spec;
  spec.mix = ParseMix("stationary=0.5,straight=0.3");
  CHECK_THROWS_AS(GenerateSynthetic(spec), ConfigError);
  spec.mix = {0.5, 0.5, 0, 0};
  spec.speed_min = 3;
  spec.speed_max = 1;
  CHECK_THROWS_AS(GenerateSynthetic(spec), ConfigError);
}
