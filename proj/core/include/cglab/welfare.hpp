#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cglab/counterfactual.hpp"
#include "cglab/types.hpp"

namespace cglab {

struct WelfareBounds {
  PerDistrict lower{};
  PerDistrict upper{};
};

/// [flow_min, flow_max] per district from the model.
WelfareBounds historical_bounds(const CounterfactualModel& model);
/// Historical bounds when they can hold n_drivers, otherwise [0, n_drivers]
/// per district with `relaxed` set.
WelfareBounds feasible_bounds(const CounterfactualModel& model, double n_drivers, bool& relaxed);

struct AugmentedLagrangianOptions {
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double violation_tolerance = 1e-6;
  double step_tolerance = 1e-8;
  int restarts = 16;
  int max_outer_iterations = 60;
  int max_inner_iterations = 5000;
};

struct WelfareReport {
  double max_pickups = 0.0;
  FlowDistribution optimal_flow;
  /// Total pickups of each restart's projected solution.
  std::vector<double> restart_pickups;
  /// Filled in by callers that score a realized outcome against the optimum.
  double achieved_pickups = 0.0;
  double ratio = 0.0;
  bool clamped = false;
};

/// Total pickups as a function of real-valued per-district flows.
using PickupFunction = std::function<double(const PerDistrict&)>;

/// Minimizes n_drivers - pickups(f) subject to sum f = n_drivers and
/// lower <= f <= upper: augmented Lagrangian on the equality constraint,
/// projected gradient with backtracking on the box, finite-difference
/// gradients, and uniformly random starts with seeds derived from `seed`.
/// Each restart's point is finally projected onto the feasible set exactly.
/// Throws Error(constraint_set_empty) when the bounds cannot hold n_drivers.
WelfareReport max_welfare(double n_drivers, const PickupFunction& pickups, const WelfareBounds& bounds,
                          const AugmentedLagrangianOptions& options, std::uint64_t seed);

/// Model-backed objective with the payoff engine's boundary heuristics.
WelfareReport max_welfare(double n_drivers, const CounterfactualModel& model, const WelfareBounds& bounds,
                          const AugmentedLagrangianOptions& options, std::uint64_t seed);
WelfareReport max_welfare(double n_drivers, const CounterfactualModel& model,
                          const AugmentedLagrangianOptions& options = {}, std::uint64_t seed = 0);

/// Euclidean projection onto {lower <= f <= upper, sum f = total}.
PerDistrict project_to_feasible(const PerDistrict& f, const WelfareBounds& bounds, double total);

}  // namespace cglab
