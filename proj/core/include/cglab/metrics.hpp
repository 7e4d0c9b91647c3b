#pragma once

#include <span>
#include <vector>

#include "cglab/outcomes.hpp"
#include "cglab/transport.hpp"
#include "cglab/types.hpp"

namespace cglab {

/// Median and the central 95% interval (linear-interpolated percentiles).
struct Summary {
  double median = 0.0;
  double lower = 0.0;  // 2.5th percentile
  double upper = 0.0;  // 97.5th percentile
  friend bool operator==(const Summary&, const Summary&) = default;
};

/// Percentile q in [0, 1] with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);
/// Throws Error(invalid_argument) on empty input.
Summary summarize(std::span<const double> values);

/// True iff `chosen` attains the maximum probability (ties count).
bool best_response_indicator(District chosen, const LevelOutcome& outcome);
/// Every maximizer of the outcome probabilities.
std::vector<District> best_responses(const LevelOutcome& outcome);

/// emd(anticipated, realized); totals must match.
double anticipation_error(const FlowDistribution& anticipated, const FlowDistribution& realized,
                          const GroundMetric& metric);
double anticipation_error(const FlowDistribution& anticipated, const LevelOutcome& outcome,
                          const GroundMetric& metric);

struct ShiftResult {
  std::vector<double> values;  // one per replicate
  Summary summary;
};

/// EMD between the displayed flow and each replicate's flow. The displayed
/// flow is rescaled to the replicate total when the two differ (exact_paper
/// level counts need not sum to N).
ShiftResult distribution_shift(const FlowDistribution& displayed, const SystemOutcomeSet& outcomes,
                               const GroundMetric& metric);

struct RatioResult {
  std::vector<double> ratios;
  Summary summary;
  /// Set when some replicate exceeded max_pickups and was clamped to 1.
  bool clamped = false;
};

/// Throws Error(invalid_argument) unless max_pickups > 0.
RatioResult welfare_ratio(const SystemOutcomeSet& outcomes, double max_pickups);

}  // namespace cglab
