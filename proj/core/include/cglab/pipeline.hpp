#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cglab/rng.hpp"
#include "cglab/trips.hpp"
#include "cglab/types.hpp"

namespace cglab {

/// Which trips belong to a stratum: a day type and a time-of-day interval on
/// the trip's start timestamp. The default is the weekday AM peak.
struct StratumSpec {
  enum class DayType { weekday, weekend, any };
  DayType day_type = DayType::weekday;
  int start_minute = 7 * 60;  // inclusive
  int end_minute = 10 * 60;   // exclusive

  bool contains(Timestamp ts) const;
};

struct DayTrips {
  /// Each driver's trips, sorted by start time.
  std::map<std::string, std::vector<TripRecord>, std::less<>> by_driver;
  std::size_t trip_count = 0;
};

struct Strata {
  std::map<Date, DayTrips> days;

  std::size_t trip_count() const;
  const DayTrips* day(Date d) const;
};

/// Keeps trips whose start falls in the stratum. An empty result is a
/// warning, not an error.
Strata stratify_trips(std::span<const TripRecord> trips, const StratumSpec& spec = {});

/// Days passing the predicate, chronological.
std::vector<Date> select_target_days(const Strata& strata, const std::function<bool(Date)>& predicate);
/// Allowlisted days present in the strata, in allowlist order.
std::vector<Date> select_target_days(const Strata& strata, std::span<const Date> allowlist);

struct PipelineOptions {
  ActionSet action_set = default_action_set();
  int decision_minute = 9 * 60;
  /// A "9 AM pickup" is a trip starting in [decision_minute, decision_minute + window).
  int pickup_window_minutes = 15;
  int lookback_days = 10;
};

struct TraceDyad {
  int from_ca = 0;  // previous drop-off D
  int to_ca = 0;    // 9 AM pickup P (an action CA)
  int idle_minutes = 0;
  std::string taxi_id;
};

struct TraceSet {
  std::vector<TraceDyad> dyads;
  /// Maximum idle minutes per (D, P).
  std::map<std::pair<int, int>, int> t_max;
};

/// One dyad per driver with a 9 AM action-CA pickup and an earlier trip that
/// day; drivers without a prior trip are skipped.
TraceSet build_trace_dyads(const Strata& strata, Date day, const PipelineOptions& options = {});

struct SearchDyad {
  int from_ca = 0;  // V
  int to_ca = 0;    // S
  int weight = 0;   // N
  friend bool operator==(const SearchDyad&, const SearchDyad&) = default;
};

enum class Classification { pickup_in_action_ca, pickup_elsewhere, no_pickup };
enum class PriorSource { observed, own, population, uniform };
enum class DecisionMode { argmax, weighted_sample };

std::string_view classification_name(Classification c);
std::string_view prior_source_name(PriorSource s);

struct SearchPrior {
  PerDistrict weights{};
  PriorSource source = PriorSource::uniform;
};

struct CandidateDriver {
  std::string taxi_id;
  int origin_ca = 0;
  Classification classification = Classification::no_pickup;
  std::optional<District> observed_district;  // set for pickup_in_action_ca
  std::vector<SearchDyad> search_dyads;
  SearchPrior prior;
};

/// Consecutive-trip dyads of one driver over the AM peaks of the
/// `lookback_days` calendar days before `day`, sorted by (V, S).
std::vector<SearchDyad> build_search_dyads(const Strata& strata, std::string_view taxi_id, Date day,
                                           int lookback_days = 10);
/// The same tabulation pooled over every driver.
std::vector<SearchDyad> population_search_dyads(const Strata& strata, Date day, int lookback_days = 10);

/// Weights over the action set from dyads leaving `origin`; falls back to
/// the population dyads from `origin`, then to uniform.
SearchPrior search_prior(std::span<const SearchDyad> own, int origin,
                         std::span<const SearchDyad> population,
                         const ActionSet& action_set = default_action_set());

/// argmax: greatest weight, ties to the smallest CA code. weighted_sample:
/// draws with probability weight / total.
District deduce_decision(const PerDistrict& weights, DecisionMode mode, Rng& rng,
                         const ActionSet& action_set = default_action_set());
/// Dyad form; uses a uniform prior when no dyad leaves `origin`.
District deduce_decision(std::span<const SearchDyad> dyads, int origin, DecisionMode mode, Rng& rng,
                         const ActionSet& action_set = default_action_set());

/// Every driver whose last drop-off before the decision time lies within
/// t_max(D, P) of it for some P, plus every driver with a 9 AM action-CA
/// pickup, classified by 9 AM status. Search dyads and priors are attached.
std::vector<CandidateDriver> identify_candidates(const Strata& strata, Date day,
                                                 const TraceSet& traces,
                                                 const PipelineOptions& options = {});

/// Observed 9 AM pickups per action district.
PerDistrict historical_pickups(const Strata& strata, Date day, const PipelineOptions& options = {});

struct DecisionScenario {
  Date day{};
  std::vector<CandidateDriver> candidates;  // retained drivers only
  long total_drivers = 0;
  FlowDistribution deduced_flow;
  PerDistrict historical_pickups{};
};

/// Drops pickup_elsewhere drivers, assigns observed pickups, deduces the
/// rest. Throws Error(empty_scenario) when nobody is retained.
DecisionScenario build_scenario(Date day, std::vector<CandidateDriver> candidates, DecisionMode mode,
                                Rng& rng, const PerDistrict& pickups = {},
                                const ActionSet& action_set = default_action_set());

/// Trace dyads -> candidates -> scenario for one day.
DecisionScenario ingest_day(const Strata& strata, Date day, const PipelineOptions& options,
                            DecisionMode mode, std::uint64_t seed);

}  // namespace cglab
