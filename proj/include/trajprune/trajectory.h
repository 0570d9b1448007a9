#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trajprune {

inline constexpr double kPi = 3.14159265358979323846;

// Ego-centric pose. x is longitudinal, y lateral (meters); heading in
// radians, normalized into [-pi, pi).
struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct Trajectory {
  std::string id;
  std::vector<Waypoint> points;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Discretization of the (x, y[, heading]) domain. heading_bins == 0 selects
// the 2D projection; k > 0 splits [-pi, pi) into k equal bins.
struct GridSpec {
  double cell_size = 0.5;
  int heading_bins = 0;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct CellIndex {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  std::int32_t ia = 0;

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

struct CellIndexHash {
  std::size_t operator()(const CellIndex& c) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(c.ix);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(c.iy);
    h = h * 0xBF58476D1CE4E5B9ULL ^ static_cast<std::uint32_t>(c.ia);
    h ^= h >> 31;
    h *= 0x94D049BB133111EBULL;
    h ^= h >> 29;
    return static_cast<std::size_t>(h);
  }
};

// Maps any finite angle into [-pi, pi). Values already in range are
// returned unchanged so that normalization is idempotent bit for bit.
double NormalizeHeading(double heading);

// Throws ValidationError if the grid is unusable (cell_size <= 0 or not
// finite, heading_bins < 0).
void ValidateGrid(const GridSpec& grid);

// Throws ValidationError naming the trajectory and field on the first
// non-finite coordinate, or when the trajectory has no points.
void ValidateTrajectory(const Trajectory& t);

// Soft check: true when the first waypoint is the (0, 0, 0) origin pose.
bool StartsAtOrigin(const Trajectory& t);

// Half-open cells [i * cell_size, (i + 1) * cell_size) on an unbounded grid.
CellIndex CellIndexOf(const Waypoint& w, const GridSpec& grid);

// One cell per waypoint, multiplicity preserved.
std::vector<CellIndex> Discretize(const Trajectory& t, const GridSpec& grid);

}  // namespace trajprune
