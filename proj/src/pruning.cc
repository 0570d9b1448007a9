#include "trajprune/pruning.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "trajprune/errors.h"
#include "trajprune/rng.h"

namespace trajprune {
namespace {

void ValidateRatio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("pruning ratio must lie in the open interval (0, 1), got " +
                      std::to_string(ratio));
  }
}

struct Resolved {
  std::size_t batch_size;
  std::size_t initial_size;
  std::size_t target;
};

Resolved ResolveParams(std::size_t n, const PruneParams& params) {
  ValidateRatio(params.ratio);
  ValidateGrid(params.grid);
  if (params.threads < 1) throw ConfigError("threads must be >= 1");
  Resolved r{};
  r.target = RetentionTarget(n, params.ratio);
  if (r.target == 0) {
    throw ConfigError("pruning ratio leaves no trajectory to retain");
  }
  r.batch_size = params.batch_size.value_or(std::max<std::size_t>(1024, n / 1000));
  if (r.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (params.initial_size) {
    r.initial_size = *params.initial_size;
    if (r.initial_size == 0) throw ConfigError("initial_size must be >= 1");
    if (n < r.initial_size) {
      throw ConfigError("dataset has " + std::to_string(n) +
                        " trajectories, fewer than initial_size " +
                        std::to_string(r.initial_size));
    }
    if (r.initial_size > r.target) {
      throw ConfigError("initial_size " + std::to_string(r.initial_size) +
                        " exceeds the retention target " +
                        std::to_string(r.target));
    }
  } else {
    r.initial_size = std::clamp<std::size_t>(std::min(r.batch_size, n / 10),
                                             1, r.target);
  }
  return r;
}

// Scores candidates order[begin, end) into gains[0, end - begin).
void ScoreRange(std::span<const Trajectory> dataset,
                std::span<const std::size_t> candidates,
                const EntropyState& state, const GridSpec& grid,
                std::span<CellDelta> deltas, std::span<double> gains,
                std::size_t lo, std::size_t hi) {
  for (std::size_t i = lo; i < hi; ++i) {
    deltas[i] = MakeDelta(dataset[candidates[i]], grid);
    gains[i] = state.EntropyDelta(deltas[i]);
  }
}

void ScoreBatch(std::span<const Trajectory> dataset,
                std::span<const std::size_t> candidates,
                const EntropyState& state, const GridSpec& grid, int threads,
                std::span<CellDelta> deltas, std::span<double> gains) {
  const std::size_t count = candidates.size();
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads),
                                             count);
  if (workers <= 1) {
    ScoreRange(dataset, candidates, state, grid, deltas, gains, 0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(ScoreRange, dataset, candidates, std::cref(state),
                      std::cref(grid), deltas, gains, lo, hi);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::size_t RetentionTarget(std::size_t n, double ratio) {
  return static_cast<std::size_t>(
      std::llround((1.0 - ratio) * static_cast<double>(n)));
}

void ValidateDataset(std::span<const Trajectory> dataset) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(dataset.size());
  for (const Trajectory& t : dataset) {
    ValidateTrajectory(t);
    if (!seen.insert(t.id).second) {
      throw ValidationError("duplicate trajectory id '" + t.id + "'");
    }
  }
}

PruneResult PruneEntropy(std::span<const Trajectory> dataset,
                         const PruneParams& params) {
  const std::size_t n = dataset.size();
  const Resolved r = ResolveParams(n, params);
  ValidateDataset(dataset);

  const std::vector<std::size_t> order = SeededPermutation(n, params.seed);

  PruneResult result;
  result.batch_size = r.batch_size;
  result.initial_size = r.initial_size;
  result.retained_ids.reserve(r.target);

  EntropyState state;
  for (std::size_t i = 0; i < r.initial_size; ++i) {
    const Trajectory& t = dataset[order[i]];
    state.Apply(MakeDelta(t, params.grid));
    result.retained_ids.push_back(t.id);
  }

  // Cumulative quota: after `processed` of the `pool` remaining candidates
  // have been seen, round(budget * processed / pool) of them are kept.
  const std::uint64_t pool = n - r.initial_size;
  const std::uint64_t budget = r.target - r.initial_size;
  std::uint64_t processed = 0;
  std::uint64_t kept = 0;

  std::vector<CellDelta> deltas(std::min<std::size_t>(r.batch_size, pool));
  std::vector<double> gains(deltas.size());
  std::vector<std::size_t> rank(deltas.size());

  for (std::size_t start = r.initial_size; start < n; start += r.batch_size) {
    const std::size_t count = std::min(r.batch_size, n - start);
    const std::span<const std::size_t> candidates(order.data() + start, count);
    ScoreBatch(dataset, candidates, state, params.grid, params.threads,
               std::span(deltas.data(), count), std::span(gains.data(), count));
    result.candidates_scored += count;

    processed += count;
    const std::uint64_t quota = (2 * budget * processed + pool) / (2 * pool);
    const auto keep = static_cast<std::size_t>(quota - kept);
    kept = quota;

    std::iota(rank.begin(), rank.begin() + count, std::size_t{0});
    std::stable_sort(rank.begin(), rank.begin() + count,
                     [&](std::size_t a, std::size_t b) {
                       return gains[a] > gains[b];
                     });
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t pick = rank[k];
      state.Apply(deltas[pick]);
      result.retained_ids.push_back(dataset[candidates[pick]].id);
    }
  }

  result.report =
      Evaluate(dataset, result.retained_ids, params.grid, params.kl_epsilon);
  return result;
}

PruneResult PruneRandom(std::span<const Trajectory> dataset,
                        const PruneParams& params) {
  const std::size_t n = dataset.size();
  ValidateRatio(params.ratio);
  ValidateGrid(params.grid);
  ValidateDataset(dataset);
  const std::size_t target = RetentionTarget(n, params.ratio);
  if (target == 0) {
    throw ConfigError("pruning ratio leaves no trajectory to retain");
  }
  const std::vector<std::size_t> order = SeededPermutation(n, params.seed);
  PruneResult result;
  result.retained_ids.reserve(target);
  for (std::size_t i = 0; i < target; ++i) {
    result.retained_ids.push_back(dataset[order[i]].id);
  }
  result.report =
      Evaluate(dataset, result.retained_ids, params.grid, params.kl_epsilon);
  return result;
}

PruneReport Evaluate(std::span<const Trajectory> original,
                     std::span<const std::string> retained_ids,
                     const GridSpec& grid, double kl_epsilon) {
  ValidateGrid(grid);
  if (original.empty()) {
    throw ValidationError("cannot evaluate pruning of an empty dataset");
  }
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    index.emplace(original[i].id, i);
  }

  const EntropyState full = BuildHistogram(original, grid);
  Histogram pruned;
  std::vector<bool> used(original.size(), false);
  for (const std::string& id : retained_ids) {
    const auto it = index.find(id);
    if (it == index.end()) {
      throw ValidationError("retained id '" + id + "' is not in the dataset");
    }
    if (used[it->second]) {
      throw ValidationError("retained id '" + id + "' listed twice");
    }
    used[it->second] = true;
    for (const CellIndex& c : Discretize(original[it->second], grid)) {
      pruned.Add(c);
    }
  }
  const EntropyState pruned_state(std::move(pruned));
  const Histogram& p = full.histogram();
  const Histogram& q = pruned_state.histogram();

  PruneReport report;
  report.n_original = original.size();
  report.n_retained = retained_ids.size();
  report.achieved_ratio = 1.0 - static_cast<double>(retained_ids.size()) /
                                    static_cast<double>(original.size());
  report.entropy_original = full.Entropy();
  report.entropy_pruned = pruned_state.Entropy();
  report.occupied_cells_original = p.occupied();
  report.occupied_cells_pruned = q.occupied();

  std::size_t shared = 0;
  for (const auto& [cell, count] : q.counts()) {
    if (p.Count(cell) > 0) ++shared;
  }
  report.support_coverage =
      p.occupied() == 0 ? 1.0
                        : static_cast<double>(shared) /
                              static_cast<double>(p.occupied());

  report.kl_epsilon =
      kl_epsilon < 0.0 ? DefaultSmoothingEpsilon(q) : kl_epsilon;
  report.kl_original_vs_pruned = KlDivergence(p, q, report.kl_epsilon);
  return report;
}

void ValidatePolicy(const FilterPolicy& policy) {
  if (policy.mode == FilterPolicy::Mode::kThreshold) {
    if (std::isnan(policy.threshold)) {
      throw ConfigError("threshold policy needs a numeric threshold");
    }
    return;
  }
  if (!(policy.keep_fraction > 0.0 && policy.keep_fraction < 1.0)) {
    throw ConfigError("keep_fraction must lie in (0, 1)");
  }
  if (policy.window == 0) throw ConfigError("window must be >= 1");
}

StreamFilter::StreamFilter(FilterPolicy policy, GridSpec grid,
                           EntropyState state, std::deque<double> recent_gains)
    : policy_(policy),
      grid_(grid),
      state_(std::move(state)),
      recent_gains_(std::move(recent_gains)) {
  ValidatePolicy(policy_);
  ValidateGrid(grid_);
  while (recent_gains_.size() > policy_.window) recent_gains_.pop_front();
}

bool StreamFilter::AcceptTopFraction(double gain) const {
  const std::size_t w = policy_.window;
  if (recent_gains_.size() < w) return true;
  std::vector<double> sorted(recent_gains_.begin(), recent_gains_.end());
  auto idx = static_cast<std::size_t>(
      std::floor((1.0 - policy_.keep_fraction) * static_cast<double>(w)));
  idx = std::min(idx, w - 1);
  std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
  return gain >= sorted[idx];
}

StreamFilter::Decision StreamFilter::Step(const Trajectory& t) {
  ValidateTrajectory(t);
  const CellDelta delta = MakeDelta(t, grid_);
  Decision d;
  d.entropy_gain = state_.EntropyDelta(delta);
  if (policy_.mode == FilterPolicy::Mode::kThreshold) {
    d.accepted = d.entropy_gain >= policy_.threshold;
  } else {
    d.accepted = AcceptTopFraction(d.entropy_gain);
    recent_gains_.push_back(d.entropy_gain);
    if (recent_gains_.size() > policy_.window) recent_gains_.pop_front();
  }
  if (d.accepted) state_.Apply(delta);
  return d;
}

}  // namespace trajprune
