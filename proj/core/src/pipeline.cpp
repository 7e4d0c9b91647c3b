#include "cglab/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <mutex>

#include "cglab/log.hpp"

namespace cglab {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) { std::clog << "[cglab] warning: " << msg << '\n'; };
  return s;
}

}  // namespace

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  auto previous = std::move(sink());
  sink() = std::move(s);
  return previous;
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

bool StratumSpec::contains(Timestamp ts) const {
  const Date d = ts.date();
  switch (day_type) {
    case DayType::weekday:
      if (!is_weekday(d)) return false;
      break;
    case DayType::weekend:
      if (is_weekday(d)) return false;
      break;
    case DayType::any: break;
  }
  const int m = ts.minute_of_day();
  return m >= start_minute && m < end_minute;
}

std::size_t Strata::trip_count() const {
  std::size_t n = 0;
  for (const auto& [_, d] : days) n += d.trip_count;
  return n;
}

const DayTrips* Strata::day(Date d) const {
  auto it = days.find(d);
  return it == days.end() ? nullptr : &it->second;
}

Strata stratify_trips(std::span<const TripRecord> trips, const StratumSpec& spec) {
  Strata strata;
  for (const auto& t : trips) {
    if (!spec.contains(t.start)) continue;
    auto& day = strata.days[t.start.date()];
    day.by_driver[t.taxi_id].push_back(t);
    ++day.trip_count;
  }
  for (auto& [_, day] : strata.days) {
    for (auto& [__, list] : day.by_driver) {
      std::stable_sort(list.begin(), list.end(), [](const TripRecord& a, const TripRecord& b) {
        return a.start < b.start || (a.start == b.start && a.end < b.end);
      });
    }
  }
  if (strata.days.empty()) warn("stratification retained no trips");
  return strata;
}

std::vector<Date> select_target_days(const Strata& strata, const std::function<bool(Date)>& predicate) {
  std::vector<Date> out;
  for (const auto& [d, _] : strata.days) {
    if (predicate(d)) out.push_back(d);
  }
  return out;
}

std::vector<Date> select_target_days(const Strata& strata, std::span<const Date> allowlist) {
  std::vector<Date> out;
  for (Date d : allowlist) {
    if (strata.day(d) != nullptr && std::find(out.begin(), out.end(), d) == out.end()) {
      out.push_back(d);
    }
  }
  return out;
}

namespace {

bool in_pickup_window(const TripRecord& t, Date day, const PipelineOptions& o) {
  if (t.start.date() != day) return false;
  const int m = t.start.minute_of_day();
  return m >= o.decision_minute && m < o.decision_minute + o.pickup_window_minutes;
}

const TripRecord* first_window_trip(const std::vector<TripRecord>& trips, Date day,
                                    const PipelineOptions& o) {
  for (const auto& t : trips) {
    if (in_pickup_window(t, day, o)) return &t;
  }
  return nullptr;
}

/// Latest trip ending at or before `limit` (by end time; stable on ties).
const TripRecord* last_dropoff_before(const std::vector<TripRecord>& trips, Timestamp limit,
                                      const TripRecord* exclude = nullptr) {
  const TripRecord* best = nullptr;
  for (const auto& t : trips) {
    if (&t == exclude || t.end > limit) continue;
    if (best == nullptr || t.end > best->end) best = &t;
  }
  return best;
}

void tabulate(const std::vector<TripRecord>& trips, std::map<std::pair<int, int>, int>& counts) {
  for (std::size_t i = 0; i + 1 < trips.size(); ++i) {
    ++counts[{trips[i].dropoff_ca, trips[i + 1].pickup_ca}];
  }
}

std::vector<SearchDyad> to_dyads(const std::map<std::pair<int, int>, int>& counts) {
  std::vector<SearchDyad> out;
  out.reserve(counts.size());
  for (const auto& [k, w] : counts) out.push_back({k.first, k.second, w});
  return out;
}

}  // namespace

TraceSet build_trace_dyads(const Strata& strata, Date day, const PipelineOptions& options) {
  TraceSet set;
  const DayTrips* trips = strata.day(day);
  if (trips == nullptr) return set;
  for (const auto& [taxi, list] : trips->by_driver) {
    const TripRecord* pickup = first_window_trip(list, day, options);
    if (pickup == nullptr || !district_from_ca(pickup->pickup_ca, options.action_set)) continue;
    const TripRecord* prev = last_dropoff_before(list, pickup->start, pickup);
    if (prev == nullptr) continue;
    const int idle = static_cast<int>(pickup->start.minutes - prev->end.minutes);
    set.dyads.push_back({prev->dropoff_ca, pickup->pickup_ca, idle, taxi});
    auto [it, inserted] = set.t_max.try_emplace({prev->dropoff_ca, pickup->pickup_ca}, idle);
    if (!inserted) it->second = std::max(it->second, idle);
  }
  return set;
}

std::vector<SearchDyad> build_search_dyads(const Strata& strata, std::string_view taxi_id, Date day,
                                           int lookback_days) {
  std::map<std::pair<int, int>, int> counts;
  for (int back = 1; back <= lookback_days; ++back) {
    const DayTrips* d = strata.day(day - std::chrono::days{back});
    if (d == nullptr) continue;
    auto it = d->by_driver.find(taxi_id);
    if (it != d->by_driver.end()) tabulate(it->second, counts);
  }
  return to_dyads(counts);
}

std::vector<SearchDyad> population_search_dyads(const Strata& strata, Date day, int lookback_days) {
  std::map<std::pair<int, int>, int> counts;
  for (int back = 1; back <= lookback_days; ++back) {
    const DayTrips* d = strata.day(day - std::chrono::days{back});
    if (d == nullptr) continue;
    for (const auto& [_, list] : d->by_driver) tabulate(list, counts);
  }
  return to_dyads(counts);
}

namespace {

bool accumulate_from(std::span<const SearchDyad> dyads, int origin, const ActionSet& set,
                     PerDistrict& weights) {
  weights = {};
  bool any = false;
  for (const auto& d : dyads) {
    if (d.from_ca != origin) continue;
    if (auto district = district_from_ca(d.to_ca, set)) {
      weights[index(*district)] += d.weight;
      any = any || d.weight > 0;
    }
  }
  return any;
}

}  // namespace

SearchPrior search_prior(std::span<const SearchDyad> own, int origin,
                         std::span<const SearchDyad> population, const ActionSet& action_set) {
  SearchPrior prior;
  if (accumulate_from(own, origin, action_set, prior.weights)) {
    prior.source = PriorSource::own;
  } else if (accumulate_from(population, origin, action_set, prior.weights)) {
    prior.source = PriorSource::population;
  } else {
    prior.weights = {1.0, 1.0, 1.0};
    prior.source = PriorSource::uniform;
  }
  return prior;
}

District deduce_decision(const PerDistrict& weights, DecisionMode mode, Rng& rng,
                         const ActionSet& action_set) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(Errc::invalid_argument, "search prior has no mass");
  if (mode == DecisionMode::argmax) return argmax_district(weights, action_set);
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < kDistricts; ++i) {
    if (u < weights[i]) return district_at(i);
    u -= weights[i];
  }
  // Rounding residue: return the last district with mass.
  for (std::size_t i = kDistricts; i-- > 0;) {
    if (weights[i] > 0.0) return district_at(i);
  }
  return District::West;
}

District deduce_decision(std::span<const SearchDyad> dyads, int origin, DecisionMode mode, Rng& rng,
                         const ActionSet& action_set) {
  const auto prior = search_prior(dyads, origin, {}, action_set);
  return deduce_decision(prior.weights, mode, rng, action_set);
}

std::vector<CandidateDriver> identify_candidates(const Strata& strata, Date day, const TraceSet& traces,
                                                 const PipelineOptions& options) {
  std::vector<CandidateDriver> out;
  const DayTrips* trips = strata.day(day);
  if (trips == nullptr) return out;

  // Largest threshold per drop-off CA over every action CA P.
  std::map<int, int> threshold;
  for (const auto& [key, t] : traces.t_max) {
    auto [it, inserted] = threshold.try_emplace(key.first, t);
    if (!inserted) it->second = std::max(it->second, t);
  }

  const Timestamp decision = make_timestamp(day, options.decision_minute);
  const auto population = population_search_dyads(strata, day, options.lookback_days);

  for (const auto& [taxi, list] : trips->by_driver) {
    const TripRecord* pickup = first_window_trip(list, day, options);
    const std::optional<District> pickup_district =
        pickup ? district_from_ca(pickup->pickup_ca, options.action_set) : std::nullopt;

    CandidateDriver c;
    c.taxi_id = taxi;
    if (pickup_district) {
      // Always a candidate: the back-trace defines t_max for its own (D, P).
      const TripRecord* prev = last_dropoff_before(list, pickup->start, pickup);
      if (prev == nullptr) continue;
      c.origin_ca = prev->dropoff_ca;
      c.classification = Classification::pickup_in_action_ca;
      c.observed_district = pickup_district;
    } else {
      const TripRecord* prev = last_dropoff_before(list, decision);
      if (prev == nullptr) continue;
      auto it = threshold.find(prev->dropoff_ca);
      if (it == threshold.end() || decision.minutes - prev->end.minutes > it->second) continue;
      c.origin_ca = prev->dropoff_ca;
      const bool busy = std::any_of(list.begin(), list.end(), [&](const TripRecord& t) {
        return t.start < decision && t.end > decision;
      });
      c.classification =
          (pickup != nullptr || busy) ? Classification::pickup_elsewhere : Classification::no_pickup;
    }

    if (c.classification == Classification::pickup_in_action_ca) {
      c.prior.weights = {};
      c.prior.weights[index(*c.observed_district)] = 1.0;
      c.prior.source = PriorSource::observed;
    } else if (c.classification == Classification::no_pickup) {
      c.search_dyads = build_search_dyads(strata, taxi, day, options.lookback_days);
      c.prior = search_prior(c.search_dyads, c.origin_ca, population, options.action_set);
    }
    out.push_back(std::move(c));
  }
  return out;
}

PerDistrict historical_pickups(const Strata& strata, Date day, const PipelineOptions& options) {
  PerDistrict out{};
  const DayTrips* trips = strata.day(day);
  if (trips == nullptr) return out;
  for (const auto& [_, list] : trips->by_driver) {
    for (const auto& t : list) {
      if (!in_pickup_window(t, day, options)) continue;
      if (auto d = district_from_ca(t.pickup_ca, options.action_set)) out[index(*d)] += 1.0;
    }
  }
  return out;
}

DecisionScenario build_scenario(Date day, std::vector<CandidateDriver> candidates, DecisionMode mode,
                                Rng& rng, const PerDistrict& pickups, const ActionSet& action_set) {
  DecisionScenario s;
  s.day = day;
  s.historical_pickups = pickups;
  PerDistrict flow{};
  for (auto& c : candidates) {
    if (c.classification == Classification::pickup_elsewhere) continue;
    const District d = c.observed_district ? *c.observed_district
                                           : deduce_decision(c.prior.weights, mode, rng, action_set);
    flow[index(d)] += 1.0;
    s.candidates.push_back(std::move(c));
  }
  if (s.candidates.empty()) throw Error(Errc::empty_scenario, "empty scenario");
  s.total_drivers = static_cast<long>(s.candidates.size());
  s.deduced_flow = FlowDistribution(flow);
  return s;
}

DecisionScenario ingest_day(const Strata& strata, Date day, const PipelineOptions& options,
                            DecisionMode mode, std::uint64_t seed) {
  const auto traces = build_trace_dyads(strata, day, options);
  auto candidates = identify_candidates(strata, day, traces, options);
  Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(day.time_since_epoch().count())}));
  return build_scenario(day, std::move(candidates), mode, rng, historical_pickups(strata, day, options),
                        options.action_set);
}

std::string_view classification_name(Classification c) {
  switch (c) {
    case Classification::pickup_in_action_ca: return "pickup_in_action_ca";
    case Classification::pickup_elsewhere: return "pickup_elsewhere";
    case Classification::no_pickup: return "no_pickup";
  }
  return "?";
}

std::string_view prior_source_name(PriorSource s) {
  switch (s) {
    case PriorSource::observed: return "observed";
    case PriorSource::own: return "own";
    case PriorSource::population: return "population";
    case PriorSource::uniform: return "uniform";
  }
  return "?";
}

}  // namespace cglab
