#include "trajprune/entropy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trajprune/errors.h"

namespace trajprune {
namespace {

constexpr int kFractionBits = 64;
constexpr double kFixedScale = 0x1.0p64;
constexpr std::int64_t kTableSize = 1 << 16;

// n ln n as a fixed-point integer. The double value is split into integer
// and fractional parts (both exact) and the fraction scaled by 2^64, which
// keeps every bit of the double term.
__int128 ComputeTerm(std::int64_t n) {
  if (n <= 1) return 0;
  const double nd = static_cast<double>(n);
  const double x = nd * std::log(nd);
  const double whole = std::floor(x);
  const double frac = x - whole;
  return (static_cast<__int128>(static_cast<std::int64_t>(whole))
          << kFractionBits) +
         static_cast<__int128>(static_cast<unsigned __int128>(frac * kFixedScale));
}

const std::vector<__int128>& TermTable() {
  static const std::vector<__int128> table = [] {
    std::vector<__int128> t(kTableSize);
    for (std::int64_t n = 0; n < kTableSize; ++n) t[n] = ComputeTerm(n);
    return t;
  }();
  return table;
}

__int128 Term(std::int64_t n) {
  if (n < kTableSize) return TermTable()[n];
  return ComputeTerm(n);
}

double FixedToDouble(__int128 v) {
  // Split to keep the conversion exact up to double rounding of each half.
  const bool negative = v < 0;
  if (negative) v = -v;
  const auto whole = static_cast<std::uint64_t>(v >> kFractionBits);
  const auto frac = static_cast<std::uint64_t>(v);
  const double r =
      static_cast<double>(whole) + static_cast<double>(frac) / kFixedScale;
  return negative ? -r : r;
}

}  // namespace

void Histogram::Add(const CellIndex& cell, std::int64_t count) {
  if (count <= 0) {
    throw ValidationError("histogram increments must be positive");
  }
  counts_[cell] += count;
  total_ += count;
}

std::int64_t Histogram::Count(const CellIndex& cell) const {
  const auto it = counts_.find(cell);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<CellIndex, std::int64_t>> Histogram::SortedCells()
    const {
  std::vector<std::pair<CellIndex, std::int64_t>> cells(counts_.begin(),
                                                        counts_.end());
  std::sort(cells.begin(), cells.end());
  return cells;
}

std::int64_t CellDelta::total() const {
  std::int64_t m = 0;
  for (const auto& [cell, inc] : entries) m += inc;
  return m;
}

CellDelta MakeDelta(std::span<const CellIndex> cells) {
  std::vector<CellIndex> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  CellDelta delta;
  for (const CellIndex& c : sorted) {
    if (!delta.entries.empty() && delta.entries.back().first == c) {
      ++delta.entries.back().second;
    } else {
      delta.entries.emplace_back(c, 1);
    }
  }
  return delta;
}

CellDelta MakeDelta(const Trajectory& t, const GridSpec& grid) {
  const std::vector<CellIndex> cells = Discretize(t, grid);
  return MakeDelta(cells);
}

EntropyState::EntropyState(Histogram histogram)
    : histogram_(std::move(histogram)) {
  for (const auto& [cell, n] : histogram_.counts()) {
    weighted_fixed_ += Term(n);
  }
}

double EntropyState::weighted_log_sum() const {
  return FixedToDouble(weighted_fixed_);
}

double EntropyState::RecomputedWeightedLogSum() const {
  double w = 0.0;
  for (const auto& [cell, n] : histogram_.counts()) {
    const double nd = static_cast<double>(n);
    w += nd * std::log(nd);
  }
  return w;
}

double EntropyState::Entropy() const {
  const std::int64_t total = histogram_.total();
  if (total == 0) return 0.0;
  const double n = static_cast<double>(total);
  const double h = std::log(n) - weighted_log_sum() / n;
  return h < 0.0 ? 0.0 : h;
}

double EntropyState::EntropyDelta(const CellDelta& delta) const {
  __int128 d_fixed = 0;
  std::int64_t added = 0;
  for (const auto& [cell, inc] : delta.entries) {
    const std::int64_t before = histogram_.Count(cell);
    d_fixed += Term(before + inc) - Term(before);
    added += inc;
  }
  if (added == 0) return 0.0;
  const double m = static_cast<double>(added);
  const double dw = FixedToDouble(d_fixed);
  const std::int64_t total = histogram_.total();
  if (total == 0) {
    const double h = std::log(m) - dw / m;
    return h < 0.0 ? 0.0 : h;
  }
  // Algebraically (ln N' - (W + dW)/N') - (ln N - W/N), rearranged to avoid
  // subtracting two nearly equal entropies.
  const double n = static_cast<double>(total);
  const double n_new = n + m;
  const double w = weighted_log_sum();
  return std::log1p(m / n) + w * m / (n * n_new) - dw / n_new;
}

void EntropyState::Apply(const CellDelta& delta) {
  for (const auto& [cell, inc] : delta.entries) {
    const std::int64_t before = histogram_.Count(cell);
    histogram_.Add(cell, inc);
    weighted_fixed_ += Term(before + inc) - Term(before);
  }
}

EntropyState Apply(EntropyState state, const CellDelta& delta) {
  state.Apply(delta);
  return state;
}

EntropyState BuildHistogram(std::span<const Trajectory> trajectories,
                            const GridSpec& grid) {
  ValidateGrid(grid);
  Histogram h;
  for (const Trajectory& t : trajectories) {
    for (const CellIndex& c : Discretize(t, grid)) h.Add(c);
  }
  return EntropyState(std::move(h));
}

double Entropy(const Histogram& h) {
  if (h.total() == 0) return 0.0;
  const double n = static_cast<double>(h.total());
  double sum = 0.0;
  for (const auto& [cell, count] : h.counts()) {
    const double p = static_cast<double>(count) / n;
    sum -= p * std::log(p);
  }
  return sum < 0.0 ? 0.0 : sum;
}

double DefaultSmoothingEpsilon(const Histogram& q) {
  if (q.total() == 0) return 1.0;
  return 1.0 / (2.0 * static_cast<double>(q.total()));
}

double KlDivergence(const Histogram& p, const Histogram& q, double epsilon) {
  if (p.total() == 0) {
    throw ValidationError("KL divergence undefined for an empty P histogram");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("KL smoothing epsilon must be finite and >= 0");
  }
  const double p_total = static_cast<double>(p.total());
  const double q_total = static_cast<double>(q.total());
  auto q_prob = [&](std::int64_t count) {
    return q_total > 0.0 ? static_cast<double>(count) / q_total : 0.0;
  };

  if (epsilon == 0.0) {
    double kl = 0.0;
    for (const auto& [cell, pc] : p.counts()) {
      const std::int64_t qc = q.Count(cell);
      if (qc == 0) return std::numeric_limits<double>::infinity();
      const double pi = static_cast<double>(pc) / p_total;
      kl += pi * std::log(pi / q_prob(qc));
    }
    return kl < 0.0 ? 0.0 : kl;
  }

  // Normalizer over the union support after flooring.
  double z = 0.0;
  for (const auto& [cell, qc] : q.counts()) z += std::max(q_prob(qc), epsilon);
  for (const auto& [cell, pc] : p.counts()) {
    if (q.Count(cell) == 0) z += epsilon;
  }
  double kl = 0.0;
  for (const auto& [cell, pc] : p.counts()) {
    const double pi = static_cast<double>(pc) / p_total;
    const double qi = std::max(q_prob(q.Count(cell)), epsilon) / z;
    kl += pi * std::log(pi / qi);
  }
  return kl < 0.0 ? 0.0 : kl;
}

}  // namespace trajprune
