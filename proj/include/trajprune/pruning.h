#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajprune/entropy.h"
#include "trajprune/trajectory.h"

namespace trajprune {

// Pass as an epsilon to select DefaultSmoothingEpsilon(pruned histogram).
inline constexpr double kAutoEpsilon = -1.0;

struct PruneParams {
  // Fraction of trajectories to remove, in (0, 1).
  double ratio = 0.4;
  // Candidates scored per round. Default: max(1024, n / 1000).
  std::optional<std::size_t> batch_size;
  // Size of the random seed subset. Default: min(batch_size, n / 10),
  // clamped into [1, retention target].
  std::optional<std::size_t> initial_size;
  std::uint64_t seed = 0;
  GridSpec grid;
  // Smoothing for the KL diagnostic in the report; 0 reports divergence as
  // +infinity, kAutoEpsilon uses half a pseudo-count.
  double kl_epsilon = 0.0;
  // Worker threads for candidate scoring. Never changes the result.
  int threads = 1;
};

struct PruneReport {
  double entropy_original = 0.0;
  double entropy_pruned = 0.0;
  // +infinity when a cell of the original is empty in the pruned set and no
  // smoothing was requested.
  double kl_original_vs_pruned = 0.0;
  double kl_epsilon = 0.0;
  double achieved_ratio = 0.0;
  std::size_t n_original = 0;
  std::size_t n_retained = 0;
  std::size_t occupied_cells_original = 0;
  std::size_t occupied_cells_pruned = 0;
  double support_coverage = 0.0;
};

struct PruneResult {
  // Acceptance order: the initial subset first, then batch winners.
  std::vector<std::string> retained_ids;
  PruneReport report;
  // Resolved parameters and bookkeeping.
  std::size_t batch_size = 0;
  std::size_t initial_size = 0;
  std::size_t candidates_scored = 0;
};

// round((1 - ratio) * n), halves rounded away from zero.
std::size_t RetentionTarget(std::size_t n, double ratio);

// Throws ValidationError on an invalid trajectory or a duplicate id.
void ValidateDataset(std::span<const Trajectory> dataset);

// Batch-greedy entropy maximization. One seeded shuffle fixes both the
// initial subset (its first initial_size entries) and the batch order. Every
// later candidate is scored once against the state frozen at the start of its
// batch; the highest-gain candidates of each batch are merged, ties kept in
// shuffle order. The budget left after the initial subset is spread evenly
// over the batches by cumulative quota, so exactly RetentionTarget(n, ratio)
// trajectories are retained.
PruneResult PruneEntropy(std::span<const Trajectory> dataset,
                         const PruneParams& params);

// Uniform sample of RetentionTarget(n, ratio) trajectories without
// replacement. Only ratio, seed, grid and kl_epsilon are used.
PruneResult PruneRandom(std::span<const Trajectory> dataset,
                        const PruneParams& params);

// Compares the retained subset with the full dataset. Throws ValidationError
// on an unknown or repeated id.
PruneReport Evaluate(std::span<const Trajectory> original,
                     std::span<const std::string> retained_ids,
                     const GridSpec& grid, double kl_epsilon);

struct FilterPolicy {
  enum class Mode { kThreshold, kTopFraction };

  Mode mode = Mode::kThreshold;
  // kThreshold: accept iff the entropy gain is >= threshold.
  double threshold = 0.0;
  // kTopFraction: accept iff the gain is >= the (1 - keep_fraction) quantile
  // of the last `window` gains. Everything is accepted until the window is
  // full.
  double keep_fraction = 0.6;
  std::size_t window = 256;
};

// Throws ConfigError when the fields for the selected mode are invalid.
void ValidatePolicy(const FilterPolicy& policy);

// Sequential admission filter. Each decision depends on every earlier
// accept, so one instance must not be shared between threads.
class StreamFilter {
 public:
  struct Decision {
    bool accepted = false;
    double entropy_gain = 0.0;
  };

  StreamFilter(FilterPolicy policy, GridSpec grid, EntropyState state = {},
               std::deque<double> recent_gains = {});

  Decision Step(const Trajectory& t);

  const EntropyState& state() const { return state_; }
  const std::deque<double>& recent_gains() const { return recent_gains_; }
  const FilterPolicy& policy() const { return policy_; }
  const GridSpec& grid() const { return grid_; }

 private:
  bool AcceptTopFraction(double gain) const;

  FilterPolicy policy_;
  GridSpec grid_;
  EntropyState state_;
  std::deque<double> recent_gains_;
};

}  // namespace trajprune
