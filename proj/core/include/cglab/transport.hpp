#pragma once

#include <span>
#include <vector>

#include "cglab/types.hpp"

namespace cglab {

/// Pairwise Euclidean distances between district positions.
class GroundMetric {
 public:
  GroundMetric() = default;
  explicit GroundMetric(std::vector<Point2> positions);

  /// Positions 0, 1, 2 on a line (unit spacing).
  static GroundMetric collinear();
  static GroundMetric from_action_set(const ActionSet& set = default_action_set());

  std::size_t size() const { return positions_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return distance_[i * positions_.size() + j]; }
  const std::vector<Point2>& positions() const { return positions_; }

 private:
  std::vector<Point2> positions_;
  std::vector<double> distance_;
};

/// Minimum-cost transport of `supply` onto `demand` (equal totals) by
/// successive shortest paths; returns the raw cost.
double transport_cost(std::span<const double> supply, std::span<const double> demand,
                      const GroundMetric& metric);

/// Transport cost divided by the total mass. Throws Error(mass_mismatch)
/// when totals differ by more than 1e-6, Error(invalid_argument) when the
/// total is not positive.
double emd(const FlowDistribution& a, const FlowDistribution& b, const GroundMetric& metric);

}  // namespace cglab
