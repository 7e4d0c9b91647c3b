#pragma once

#include <span>
#include <vector>

namespace cglab {

/// exact_paper reproduces the published arithmetic (proportions rounded to
/// tenths, counts to tens); largest_remainder keeps sums exact.
enum class RoundingMode { exact_paper, largest_remainder };

inline constexpr int kDefaultMaxLevel = 2;

struct LevelK {
  int k = 0;
  friend auto operator<=>(const LevelK&, const LevelK&) = default;
};

struct LevelSplit {
  double lambda = 0.0;  // 0 when the split was not derived from a Poisson rate
  std::vector<double> proportions;  // index = level
  RoundingMode rounding = RoundingMode::largest_remainder;

  int max_level() const { return static_cast<int>(proportions.size()) - 1; }
};

/// Belief a level-k agent holds over levels 0..k-1.
struct MixtureBelief {
  LevelK owner_level;
  std::vector<double> proportions;
};

/// Normalizes per-level weights (counts or pmf values) into a split.
/// Throws Error(degenerate_levels) when every weight is zero.
LevelSplit truncate_and_rescale(std::span<const double> weights, RoundingMode mode,
                                double lambda = 0.0);

/// Poisson(lambda) pmf for k = 0..max_level.
std::vector<double> poisson_pmf(double lambda, int max_level);

/// truncate_and_rescale(poisson_pmf(lambda, max_level), mode).
LevelSplit poisson_split(double lambda, RoundingMode mode, int max_level = kDefaultMaxLevel);

/// Renormalizes split levels 0..k-1. Throws Error(no_belief) for k = 0.
MixtureBelief endowed_mixture(const LevelSplit& split, LevelK k);

/// Integer level counts for a population of n_drivers. In exact_paper mode
/// every count is rounded to the nearest ten and the total may differ from
/// n_drivers; in largest_remainder mode counts sum to n_drivers.
std::vector<long> level_counts(const LevelSplit& split, long n_drivers);

/// Hamilton apportionment of `total` units. Ties in remainder go to the
/// lower index.
std::vector<long> apportion_largest_remainder(std::span<const double> proportions, long total);

}  // namespace cglab
