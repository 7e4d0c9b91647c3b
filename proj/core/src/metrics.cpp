#include "cglab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cglab {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(Errc::invalid_argument, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  return {percentile(v, 0.5), percentile(v, 0.025), percentile(v, 0.975)};
}

bool best_response_indicator(District chosen, const LevelOutcome& outcome) {
  const auto& p = outcome.pickup_probabilities;
  return p[index(chosen)] >= *std::max_element(p.begin(), p.end());
}

std::vector<District> best_responses(const LevelOutcome& outcome) {
  std::vector<District> out;
  for (District d : kAllDistricts) {
    if (best_response_indicator(d, outcome)) out.push_back(d);
  }
  return out;
}

double anticipation_error(const FlowDistribution& anticipated, const FlowDistribution& realized,
                          const GroundMetric& metric) {
  return emd(anticipated, realized, metric);
}

double anticipation_error(const FlowDistribution& anticipated, const LevelOutcome& outcome,
                          const GroundMetric& metric) {
  return emd(anticipated, outcome.expected_flow, metric);
}

ShiftResult distribution_shift(const FlowDistribution& displayed, const SystemOutcomeSet& outcomes,
                               const GroundMetric& metric) {
  ShiftResult out;
  out.values.reserve(outcomes.replicates.size());
  for (const auto& rep : outcomes.replicates) {
    const double total = rep.flow.total();
    const FlowDistribution shown =
        std::abs(displayed.total() - total) > 1e-9 ? displayed.rescaled(total) : displayed;
    out.values.push_back(emd(shown, rep.flow, metric));
  }
  out.summary = summarize(out.values);
  return out;
}

RatioResult welfare_ratio(const SystemOutcomeSet& outcomes, double max_pickups) {
  if (!(max_pickups > 0.0)) throw Error(Errc::invalid_argument, "max_pickups must be positive");
  RatioResult out;
  out.ratios.reserve(outcomes.replicates.size());
  for (const auto& rep : outcomes.replicates) {
    double r = rep.total_pickups() / max_pickups;
    if (r > 1.0) {
      out.clamped = true;
      r = 1.0;
    }
    out.ratios.push_back(std::max(0.0, r));
  }
  out.summary = summarize(out.ratios);
  return out;
}

}  // namespace cglab
