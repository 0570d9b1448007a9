#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajprune/trajectory.h"

namespace trajprune {

enum class Motion { kStationary = 0, kStraight, kLeftTurn, kRightTurn };

inline constexpr std::size_t kMotionCount = 4;

std::string_view MotionName(Motion m);

// Category encoded in a generated id ("left_turn-000042" -> kLeftTurn).
std::optional<Motion> MotionFromId(std::string_view id);

inline bool IsTurn(Motion m) {
  return m == Motion::kLeftTurn || m == Motion::kRightTurn;
}

struct SyntheticSpec {
  std::size_t count = 1000;
  // Weights indexed by Motion; non-negative, summing to 1.
  std::array<double, kMotionCount> mix = {0.4, 0.5, 0.05, 0.05};
  std::size_t points_per_trajectory = 16;
  double time_step = 0.5;  // seconds between waypoints
  double speed_min = 2.0;  // m/s
  double speed_max = 15.0;
  double turn_radius_min = 8.0;  // m
  double turn_radius_max = 40.0;
  // Positional noise, a 2D Gaussian truncated at 3 standard deviations.
  // The first waypoint stays on the origin pose.
  double noise_std = 0.05;
  std::uint64_t seed = 0;
};

// Throws ConfigError on invalid fields.
void ValidateSyntheticSpec(const SyntheticSpec& spec);

// "stationary=0.4,straight=0.5,turns=0.1". "turns" splits evenly between
// left_turn and right_turn. Unlisted categories get weight 0.
std::array<double, kMotionCount> ParseMix(std::string_view text);

// Exact per-category counts via largest-remainder rounding; remainders that
// tie go to the earlier category.
std::array<std::size_t, kMotionCount> CategoryCounts(
    std::size_t count, const std::array<double, kMotionCount>& mix);

// Seeded and deterministic. Stationary trajectories sit at the origin;
// straight ones move along +x at a constant speed; turns follow
// constant-speed circular arcs (left: +y side, right: -y side) with the
// heading tangent to the path. Ids are "<category>-<index>" and the output
// order is a seeded shuffle of the categories.
std::vector<Trajectory> GenerateSynthetic(const SyntheticSpec& spec);

}  // namespace trajprune
