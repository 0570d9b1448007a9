#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trajprune/trajectory.h"

namespace trajprune {

// All entropies are in nats. The log base only rescales entropy and never
// changes the ranking of entropy gains.

// Sparse point-count histogram. Zero-count cells are never stored and
// total() is always the sum of the stored counts.
class Histogram {
 public:
  using CountMap = std::unordered_map<CellIndex, std::int64_t, CellIndexHash>;

  Histogram() = default;

  // count must be positive.
  void Add(const CellIndex& cell, std::int64_t count = 1);
  std::int64_t Count(const CellIndex& cell) const;

  std::int64_t total() const { return total_; }
  std::size_t occupied() const { return counts_.size(); }
  bool empty() const { return total_ == 0; }
  const CountMap& counts() const { return counts_; }

  // (cell, count) pairs in ascending cell order.
  std::vector<std::pair<CellIndex, std::int64_t>> SortedCells() const;

  friend bool operator==(const Histogram& a, const Histogram& b) {
    return a.total_ == b.total_ && a.counts_ == b.counts_;
  }

 private:
  CountMap counts_;
  std::int64_t total_ = 0;
};

// The distinct cells touched by one candidate trajectory and how many of
// its points land in each. Entries are sorted by cell and unique.
struct CellDelta {
  std::vector<std::pair<CellIndex, std::int64_t>> entries;

  std::int64_t total() const;
};

CellDelta MakeDelta(std::span<const CellIndex> cells);
CellDelta MakeDelta(const Trajectory& t, const GridSpec& grid);

// Histogram plus the cached aggregate W = sum_i n_i ln n_i, which gives
// H = ln N - W / N and lets EntropyDelta run in O(|delta|).
//
// W is accumulated in fixed point (64 fractional bits), so the cache
// is an exact function of the counts: incremental updates never drift, and
// a state rebuilt from a histogram snapshot is bit-identical to one grown by
// Apply. Const members may be called concurrently; Apply needs exclusive
// access.
class EntropyState {
 public:
  EntropyState() = default;
  explicit EntropyState(Histogram histogram);

  const Histogram& histogram() const { return histogram_; }
  std::int64_t total() const { return histogram_.total(); }

  // Cached W as a double.
  double weighted_log_sum() const;
  // W summed directly from the counts in double precision, bypassing the
  // cache. Used for consistency checks.
  double RecomputedWeightedLogSum() const;

  double Entropy() const;

  // Entropy(state + delta) - Entropy(state), without touching the state.
  double EntropyDelta(const CellDelta& delta) const;

  void Apply(const CellDelta& delta);

  friend bool operator==(const EntropyState& a, const EntropyState& b) {
    return a.weighted_fixed_ == b.weighted_fixed_ &&
           a.histogram_ == b.histogram_;
  }

 private:
  Histogram histogram_;
  __int128 weighted_fixed_ = 0;
};

// Value-returning form of EntropyState::Apply.
EntropyState Apply(EntropyState state, const CellDelta& delta);

// Histogram over every waypoint of every trajectory.
EntropyState BuildHistogram(std::span<const Trajectory> trajectories,
                            const GridSpec& grid);

// Direct evaluation of -sum (n_i/N) ln(n_i/N); 0 for an empty histogram.
double Entropy(const Histogram& h);

// Default smoothing floor: half a pseudo-count of q.
double DefaultSmoothingEpsilon(const Histogram& q);

// D_KL(P || Q) over the union of both supports, where P and Q are the
// normalized histograms. With epsilon == 0 the result is +infinity when
// some cell of p is empty in q. With epsilon > 0 every Q_i is floored at
// epsilon and Q renormalized, so the result is always finite.
// Throws ValidationError when p is empty or epsilon is negative.
double KlDivergence(const Histogram& p, const Histogram& q, double epsilon);

}  // namespace trajprune
