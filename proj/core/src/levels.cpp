#include "cglab/levels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cglab/types.hpp"

namespace cglab {

namespace {

double round_to_tenth(double p) { return std::round(p * 10.0) / 10.0; }

std::vector<double> normalize_exact_sum(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] / total;
  // Absorb the floating-point residue into the largest entry.
  const auto largest = static_cast<std::size_t>(
      std::distance(out.begin(), std::max_element(out.begin(), out.end())));
  double rest = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i != largest) rest += out[i];
  }
  out[largest] = 1.0 - rest;
  return out;
}

}  // namespace

LevelSplit truncate_and_rescale(std::span<const double> weights, RoundingMode mode, double lambda) {
  if (weights.empty()) throw Error(Errc::degenerate_levels, "degenerate level distribution");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(Errc::invalid_argument, "level weights must be finite and non-negative");
    }
    total += w;
  }
  if (total <= 0.0) throw Error(Errc::degenerate_levels, "degenerate level distribution");

  LevelSplit split;
  split.lambda = lambda;
  split.rounding = mode;
  if (mode == RoundingMode::exact_paper) {
    split.proportions.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      split.proportions[i] = round_to_tenth(weights[i] / total);
    }
  } else {
    split.proportions = normalize_exact_sum(weights);
  }
  return split;
}

std::vector<double> poisson_pmf(double lambda, int max_level) {
  if (!(lambda > 0.0) || max_level < 0) {
    throw Error(Errc::invalid_argument, "poisson_pmf needs lambda > 0 and max_level >= 0");
  }
  std::vector<double> pmf(static_cast<std::size_t>(max_level) + 1);
  double term = std::exp(-lambda);
  for (int k = 0; k <= max_level; ++k) {
    if (k > 0) term *= lambda / k;
    pmf[static_cast<std::size_t>(k)] = term;
  }
  return pmf;
}

LevelSplit poisson_split(double lambda, RoundingMode mode, int max_level) {
  const auto pmf = poisson_pmf(lambda, max_level);
  return truncate_and_rescale(pmf, mode, lambda);
}

MixtureBelief endowed_mixture(const LevelSplit& split, LevelK k) {
  if (k.k <= 0) throw Error(Errc::no_belief, "level-0 holds no belief");
  if (k.k > split.max_level()) {
    throw Error(Errc::invalid_argument, "level exceeds the split's max level");
  }
  std::span<const double> lower(split.proportions.data(), static_cast<std::size_t>(k.k));
  MixtureBelief belief;
  belief.owner_level = k;
  if (k.k == 1) {
    belief.proportions = {1.0};
    return belief;
  }
  const double mass = std::accumulate(lower.begin(), lower.end(), 0.0);
  if (mass <= 0.0) throw Error(Errc::degenerate_levels, "degenerate level distribution");
  if (split.rounding == RoundingMode::exact_paper) {
    belief.proportions.resize(lower.size());
    for (std::size_t i = 0; i < lower.size(); ++i) {
      belief.proportions[i] = round_to_tenth(lower[i] / mass);
    }
  } else {
    belief.proportions = normalize_exact_sum(lower);
  }
  return belief;
}

std::vector<long> apportion_largest_remainder(std::span<const double> proportions, long total) {
  const double mass = std::accumulate(proportions.begin(), proportions.end(), 0.0);
  if (!(mass > 0.0)) throw Error(Errc::degenerate_levels, "degenerate level distribution");
  std::vector<long> counts(proportions.size());
  std::vector<double> remainder(proportions.size());
  long assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double quota = proportions[i] / mass * static_cast<double>(total);
    counts[i] = static_cast<long>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[order[i % order.size()]];
  return counts;
}

std::vector<long> level_counts(const LevelSplit& split, long n_drivers) {
  if (n_drivers <= 0) throw Error(Errc::invalid_argument, "n_drivers must be positive");
  if (split.rounding == RoundingMode::largest_remainder) {
    return apportion_largest_remainder(split.proportions, n_drivers);
  }
  std::vector<long> counts(split.proportions.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double raw = split.proportions[i] * static_cast<double>(n_drivers);
    counts[i] = static_cast<long>(std::llround(raw / 10.0)) * 10;
  }
  return counts;
}

}  // namespace cglab
