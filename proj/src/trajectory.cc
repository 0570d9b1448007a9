#include "trajprune/trajectory.h"

#include <cmath>
#include <limits>
#include <string>

#include "trajprune/errors.h"

namespace trajprune {
namespace {

std::int32_t FloorToCell(double value, double cell_size, const char* field) {
  const double cell = std::floor(value / cell_size);
  if (!std::isfinite(cell) ||
      cell < static_cast<double>(std::numeric_limits<std::int32_t>::min()) ||
      cell > static_cast<double>(std::numeric_limits<std::int32_t>::max())) {
    throw ValidationError(std::string("coordinate ") + field +
                          " outside the representable grid range");
  }
  return static_cast<std::int32_t>(cell);
}

}  // namespace

double NormalizeHeading(double heading) {
  if (heading >= -kPi && heading < kPi) return heading;
  double h = std::fmod(heading + kPi, 2.0 * kPi);
  if (h < 0.0) h += 2.0 * kPi;
  h -= kPi;
  // fmod round-off can land exactly on +pi.
  if (h >= kPi) h = -kPi;
  return h;
}

void ValidateGrid(const GridSpec& grid) {
  if (!(grid.cell_size > 0.0) || !std::isfinite(grid.cell_size)) {
    throw ValidationError("grid cell_size must be a finite value > 0");
  }
  if (grid.heading_bins < 0) {
    throw ValidationError("grid heading_bins must be >= 0");
  }
}

void ValidateTrajectory(const Trajectory& t) {
  if (t.points.empty()) {
    throw ValidationError("trajectory '" + t.id + "' has no points");
  }
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const Waypoint& w = t.points[i];
    const char* bad = nullptr;
    if (!std::isfinite(w.x)) {
      bad = "x";
    } else if (!std::isfinite(w.y)) {
      bad = "y";
    } else if (!std::isfinite(w.heading)) {
      bad = "heading";
    }
    if (bad != nullptr) {
      throw ValidationError("trajectory '" + t.id + "' point " +
                            std::to_string(i) + ": field " + bad +
                            " is not finite");
    }
  }
}

bool StartsAtOrigin(const Trajectory& t) {
  return !t.points.empty() && t.points.front() == Waypoint{};
}

CellIndex CellIndexOf(const Waypoint& w, const GridSpec& grid) {
  if (!std::isfinite(w.x)) throw ValidationError("field x is not finite");
  if (!std::isfinite(w.y)) throw ValidationError("field y is not finite");
  if (!std::isfinite(w.heading)) {
    throw ValidationError("field heading is not finite");
  }
  CellIndex c;
  c.ix = FloorToCell(w.x, grid.cell_size, "x");
  c.iy = FloorToCell(w.y, grid.cell_size, "y");
  if (grid.heading_bins > 0) {
    const int k = grid.heading_bins;
    const double width = 2.0 * kPi / k;
    const double h = NormalizeHeading(w.heading);
    int ia = static_cast<int>(std::floor((h + kPi) / width));
    if (ia < 0) ia = 0;
    if (ia > k - 1) ia = k - 1;
    c.ia = ia;
  }
  return c;
}

std::vector<CellIndex> Discretize(const Trajectory& t, const GridSpec& grid) {
  if (t.points.empty()) {
    throw ValidationError("trajectory '" + t.id + "' has no points");
  }
  std::vector<CellIndex> cells;
  cells.reserve(t.points.size());
  for (const Waypoint& w : t.points) {
    try {
      cells.push_back(CellIndexOf(w, grid));
    } catch (const ValidationError& e) {
      throw ValidationError("trajectory '" + t.id + "': " + e.what());
    }
  }
  return cells;
}

}  // namespace trajprune
