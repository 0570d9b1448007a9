#include "trajprune/synthetic.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "trajprune/errors.h"
#include "trajprune/rng.h"

namespace trajprune {
namespace {

constexpr std::array<std::string_view, kMotionCount> kNames = {
    "stationary", "straight", "left_turn", "right_turn"};

void CheckRange(double lo, double hi, const char* name) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw ConfigError(std::string(name) + " range is empty or not finite");
  }
}

}  // namespace

std::string_view MotionName(Motion m) {
  return kNames[static_cast<std::size_t>(m)];
}

std::optional<Motion> MotionFromId(std::string_view id) {
  const std::size_t dash = id.rfind('-');
  const std::string_view prefix =
      dash == std::string_view::npos ? id : id.substr(0, dash);
  for (std::size_t i = 0; i < kMotionCount; ++i) {
    if (prefix == kNames[i]) return static_cast<Motion>(i);
  }
  return std::nullopt;
}

void ValidateSyntheticSpec(const SyntheticSpec& spec) {
  if (spec.count == 0) throw ConfigError("count must be >= 1");
  if (spec.points_per_trajectory == 0) {
    throw ConfigError("points per trajectory must be >= 1");
  }
  double sum = 0.0;
  for (double w : spec.mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("mix weights must be finite and non-negative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("mix weights must sum to 1, got " + std::to_string(sum));
  }
  if (!(spec.time_step > 0.0) || !std::isfinite(spec.time_step)) {
    throw ConfigError("time step must be > 0");
  }
  CheckRange(spec.speed_min, spec.speed_max, "speed");
  CheckRange(spec.turn_radius_min, spec.turn_radius_max, "turn radius");
  if (spec.turn_radius_min <= 0.0) {
    throw ConfigError("turn radius must be > 0");
  }
  if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
    throw ConfigError("noise std must be >= 0");
  }
}

std::array<double, kMotionCount> ParseMix(std::string_view text) {
  std::array<double, kMotionCount> mix{};
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(start, comma - start);
    start = comma + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("mix entry '" + std::string(item) +
                        "' must be name=weight");
    }
    const std::string_view name = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    double w = 0.0;
    const auto [ptr, ec] =
        std::from_chars(value.data(), value.data() + value.size(), w);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw ConfigError("mix weight '" + std::string(value) +
                        "' is not a number");
    }
    if (name == "turns" || name == "turn") {
      mix[static_cast<std::size_t>(Motion::kLeftTurn)] += w / 2.0;
      mix[static_cast<std::size_t>(Motion::kRightTurn)] += w / 2.0;
      continue;
    }
    const auto it = std::find(kNames.begin(), kNames.end(), name);
    if (it == kNames.end()) {
      throw ConfigError("unknown mix category '" + std::string(name) + "'");
    }
    mix[static_cast<std::size_t>(it - kNames.begin())] += w;
  }
  return mix;
}

std::array<std::size_t, kMotionCount> CategoryCounts(
    std::size_t count, const std::array<double, kMotionCount>& mix) {
  std::array<std::size_t, kMotionCount> counts{};
  std::array<double, kMotionCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < kMotionCount; ++i) {
    const double exact = mix[i] * static_cast<double>(count);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  std::array<std::size_t, kMotionCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return remainder[a] > remainder[b];
                   });
  for (std::size_t k = 0; assigned < count; k = (k + 1) % kMotionCount) {
    ++counts[order[k]];
    ++assigned;
  }
  return counts;
}

std::vector<Trajectory> GenerateSynthetic(const SyntheticSpec& spec) {
  ValidateSyntheticSpec(spec);
  const auto counts = CategoryCounts(spec.count, spec.mix);

  std::vector<Motion> kinds;
  kinds.reserve(spec.count);
  for (std::size_t i = 0; i < kMotionCount; ++i) {
    kinds.insert(kinds.end(), counts[i], static_cast<Motion>(i));
  }

  Xoshiro256 rng(spec.seed);
  for (std::size_t i = kinds.size(); i > 1; --i) {
    std::swap(kinds[i - 1], kinds[rng.Below(i)]);
  }

  const int width = static_cast<int>(std::to_string(spec.count - 1).size());
  std::vector<Trajectory> out;
  out.reserve(spec.count);
  char suffix[32];
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const Motion kind = kinds[i];
    Trajectory t;
    std::snprintf(suffix, sizeof(suffix), "-%0*zu", width, i);
    t.id = std::string(MotionName(kind)) + suffix;
    t.points.reserve(spec.points_per_trajectory);

    const double speed = rng.Uniform(spec.speed_min, spec.speed_max);
    const double radius =
        rng.Uniform(spec.turn_radius_min, spec.turn_radius_max);
    for (std::size_t k = 0; k < spec.points_per_trajectory; ++k) {
      const double time = static_cast<double>(k) * spec.time_step;
      Waypoint w;
      switch (kind) {
        case Motion::kStationary:
          break;
        case Motion::kStraight:
          w.x = speed * time;
          break;
        case Motion::kLeftTurn:
        case Motion::kRightTurn: {
          const double side = kind == Motion::kLeftTurn ? 1.0 : -1.0;
          const double theta = speed * time / radius;
          w.x = radius * std::sin(theta);
          w.y = side * radius * (1.0 - std::cos(theta));
          w.heading = NormalizeHeading(side * theta);
          break;
        }
      }
      if (k > 0 && spec.noise_std > 0.0) {
        double nx = 0.0, ny = 0.0;
        do {
          nx = rng.Gaussian();
          ny = rng.Gaussian();
        } while (nx * nx + ny * ny > 9.0);
        w.x += spec.noise_std * nx;
        w.y += spec.noise_std * ny;
      }
      t.points.push_back(w);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace trajprune
