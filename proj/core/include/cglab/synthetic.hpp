#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "cglab/trips.hpp"
#include "cglab/types.hpp"

namespace cglab {

/// Log-log pickup law used to realize 9 AM pickups in synthetic corpora:
/// log(pickups) = intercept + slope * log(flow) + sigma * z.
struct PickupLaw {
  PerDistrict intercept{0.95, 0.85, 0.90};
  PerDistrict slope{0.70, 0.72, 0.68};
  double sigma = 0.06;

  /// Noise-free pickups at `flow`, clamped to [0, flow].
  double expected_pickups(District d, double flow) const;
  double probability(District d, double flow) const;
};

/// Desk-scale stand-in for the taxi trip corpus.
///
/// Every driver keeps a fixed preferred action district for each drop-off
/// CA they frequent, so consecutive-trip dyads V -> S concentrate on that
/// preference. On each generated weekday a driver ends the early AM peak at
/// a drop-off CA whose preference is drawn from the day's skew, searches
/// that district at 9 AM, and a PickupLaw-sized subset of each district's
/// searchers records a 9 AM pickup there.
struct SyntheticConfig {
  int drivers = 760;
  /// Weekdays to generate starting at `start` (weekends in between get a
  /// few trips so stratification has something to discard).
  int days = 80;
  Date start = parse_date("2014-03-03");
  /// When non-empty, generate exactly these days instead of the range.
  std::vector<Date> dates;

  PerDistrict skew{0.6, 0.25, 0.15};
  /// Per-day overrides of `skew`.
  std::map<Date, PerDistrict> day_skew;
  /// Concentration of the per-day Dirichlet perturbation of `skew`;
  /// 0 disables it. Overridden days are never perturbed.
  double skew_concentration = 0.0;

  double active_probability = 0.9;
  double loyalty = 0.9;
  double elsewhere_probability = 0.04;
  PickupLaw law;
  /// Round timestamps down to this many minutes (15 mimics the public data).
  int bin_minutes = 0;
  std::uint64_t seed = 7;
};

/// Deterministic for a given config. Throws Error(invalid_argument) when
/// drivers or days is not positive.
std::vector<TripRecord> generate_synthetic(const SyntheticConfig& config);

/// Best-response targets of one calibrated trial.
struct TrialTarget {
  District l1_best = District::West;
  District l2_best = District::East;
};

/// Grid-searches the skew simplex for the day skew whose L0 flow makes
/// `target.l1_best` the unique display argmax and whose L2 flow (belief
/// mixture with every L1 on l1_best) makes `target.l2_best` the unique best
/// response, maximizing the smaller relative probability margin. `min_share`
/// keeps every district populated.
PerDistrict calibrate_day_skew(const PickupLaw& law, double n_drivers, const TrialTarget& target,
                               std::span<const double> l2_belief, double min_share = 0.12);

}  // namespace cglab
