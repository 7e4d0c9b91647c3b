#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "cglab/log.hpp"
#include "cglab/pipeline.hpp"
#include "cglab/synthetic.hpp"

using namespace cglab;

namespace {

TripRecord trip(std::string id, Date day, int start_min, int end_min, int from, int to) {
  return {std::move(id), make_timestamp(day, start_min), make_timestamp(day, end_min), from, to};
}

int hm(int h, int m) { return h * 60 + m; }

const Date kTue = parse_date("2014-07-22");

// Random per-driver trip chains over a few days; trips never overlap.
std::vector<TripRecord> random_corpus(int drivers, int days, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const int cas[] = {8, 28, 32, 6, 7, 24, 33, 76};
  std::vector<TripRecord> out;
  for (int k = 0; k < days; ++k) {
    const Date day = kTue - std::chrono::days{days - 1 - k};
    for (int d = 0; d < drivers; ++d) {
      int t = hm(6, 30) + static_cast<int>(uniform_index(rng, 60));
      while (t < hm(10, 30)) {
        const int len = 3 + static_cast<int>(uniform_index(rng, 25));
        out.push_back(trip("T" + std::to_string(d), day, t, t + len, cas[uniform_index(rng, 8)],
                           cas[uniform_index(rng, 8)]));
        t += len + static_cast<int>(uniform_index(rng, 30));
      }
    }
  }
  return out;
}

// Oracle helpers operate on the raw trip list, not on Strata.
std::vector<TripRecord> driver_day(const std::vector<TripRecord>& all, const std::string& id, Date day) {
  std::vector<TripRecord> out;
  for (const auto& t : all) {
    const int m = t.start.minute_of_day();
    if (t.taxi_id == id && t.start.date() == day && is_weekday(day) && m >= hm(7, 0) && m < hm(10, 0)) out.push_back(t);
  }
  return out;
}

bool is_action(int ca) { return ca == 8 || ca == 28 || ca == 32; }

}  // namespace

TEST_SUITE("data_pipeline") {
  TEST_CASE("weekday AM peak stratification") {
    const Date sat = parse_date("2014-07-26");
    const std::vector<TripRecord> trips{trip("a", kTue, hm(8, 30), hm(8, 40), 8, 32),
                                        trip("b", sat, hm(8, 30), hm(8, 40), 8, 32),
                                        trip("c", kTue, hm(10, 0), hm(10, 5), 8, 32),
                                        trip("d", kTue, hm(7, 0), hm(7, 5), 8, 32)};
    const auto strata = stratify_trips(trips);
    CHECK(strata.trip_count() == 2);
    REQUIRE(strata.day(kTue) != nullptr);
    CHECK(strata.day(kTue)->by_driver.count("a") == 1);
    CHECK(strata.day(sat) == nullptr);
  }

  TEST_CASE("stratification matches a brute-force recount over a week") {
    Rng rng = make_rng(3);
    std::vector<TripRecord> trips;
    const Date monday = parse_date("2014-07-21");
    for (int i = 0; i < 1000; ++i) {
      const auto minute = static_cast<std::int64_t>(uniform_index(rng, 7 * 1440));
      const Timestamp s{make_timestamp(monday, 0).minutes + minute};
      trips.push_back({"x" + std::to_string(i % 37), s, Timestamp{s.minutes + 5}, 8, 28});
    }
    long expected = 0;
    for (const auto& t : trips) {
      const auto day_index = (t.start.minutes - make_timestamp(monday, 0).minutes) / 1440;
      const auto m = t.start.minutes % 1440;
      if (day_index < 5 && m >= 420 && m < 600) ++expected;
    }
    CHECK(static_cast<long>(stratify_trips(trips).trip_count()) == expected);
  }

  TEST_CASE("empty stratum is a warning") {
    std::vector<std::string> seen;
    auto previous = set_warning_sink([&](std::string_view m) { seen.emplace_back(m); });
    const std::vector<TripRecord> trips{trip("a", parse_date("2014-07-26"), hm(8, 0), hm(8, 5), 8, 8)};
    CHECK_NOTHROW(stratify_trips(trips));
    set_warning_sink(std::move(previous));
    CHECK(seen.size() == 1);
  }

  TEST_CASE("allowlist keeps the main trial order") {
    const char* dates[] = {"2014-07-22", "2014-05-13", "2015-05-21", "2014-06-05", "2015-06-25", "2014-11-07",
                           "2015-06-30", "2015-10-26", "2015-10-22", "2015-10-14", "2014-09-26", "2014-12-05",
                           "2015-08-28", "2014-05-22", "2014-10-24", "2014-09-29"};
    std::vector<Date> allow;
    std::vector<TripRecord> trips;
    for (const char* s : dates) {
      allow.push_back(parse_date(s));
      trips.push_back(trip("a", allow.back(), hm(8, 0), hm(8, 10), 8, 28));
    }
    trips.push_back(trip("a", parse_date("2014-07-23"), hm(8, 0), hm(8, 10), 8, 28));
    const auto strata = stratify_trips(trips);
    CHECK(select_target_days(strata, std::span<const Date>(allow)) == allow);

    const auto all = select_target_days(strata, [](Date) { return true; });
    CHECK(all.size() == 17);
    CHECK(std::is_sorted(all.begin(), all.end()));
  }

  TEST_CASE("predicate selection matches a brute-force filter") {
    std::vector<TripRecord> trips;
    Date d = parse_date("2014-03-03");
    std::vector<Date> weekdays;
    while (weekdays.size() < 50) {
      if (is_weekday(d)) {
        weekdays.push_back(d);
        trips.push_back(trip("a", d, hm(8, 0), hm(8, 10), 8, 28));
      }
      d += std::chrono::days{1};
    }
    const auto accept = [](Date x) { return mix64(static_cast<std::uint64_t>(x.time_since_epoch().count())) % 5 < 2; };
    std::vector<Date> expected;
    std::copy_if(weekdays.begin(), weekdays.end(), std::back_inserter(expected), accept);
    CHECK(select_target_days(stratify_trips(trips), accept) == expected);
  }

  TEST_CASE("single back-trace and t_max") {
    const std::vector<TripRecord> trips{trip("a", kTue, hm(8, 20), hm(8, 45), 28, 8),
                                        trip("a", kTue, hm(9, 0), hm(9, 10), 32, 28)};
    const auto traces = build_trace_dyads(stratify_trips(trips), kTue);
    REQUIRE(traces.dyads.size() == 1);
    CHECK(traces.dyads[0].from_ca == 8);
    CHECK(traces.dyads[0].to_ca == 32);
    CHECK(traces.dyads[0].idle_minutes == 15);
    CHECK(traces.t_max.at({8, 32}) == 15);
  }

  TEST_CASE("t_max is the maximum idle time; drivers without a prior trip are skipped") {
    const std::vector<TripRecord> trips{
        trip("a", kTue, hm(8, 30), hm(8, 50), 28, 8), trip("a", kTue, hm(9, 0), hm(9, 10), 32, 28),
        trip("b", kTue, hm(8, 15), hm(8, 35), 28, 8), trip("b", kTue, hm(9, 0), hm(9, 10), 32, 28),
        trip("c", kTue, hm(9, 2), hm(9, 10), 32, 28)};
    const auto traces = build_trace_dyads(stratify_trips(trips), kTue);
    CHECK(traces.dyads.size() == 2);
    CHECK(traces.t_max.at({8, 32}) == 25);
  }

  TEST_CASE("candidate inclusion by threshold") {
    const std::vector<TripRecord> trips{
        trip("a", kTue, hm(8, 30), hm(8, 45), 28, 8), trip("a", kTue, hm(9, 0), hm(9, 10), 32, 28),
        trip("near", kTue, hm(8, 40), hm(8, 50), 28, 8), trip("far", kTue, hm(8, 20), hm(8, 30), 28, 8)};
    const auto strata = stratify_trips(trips);
    const auto traces = build_trace_dyads(strata, kTue);
    const auto cands = identify_candidates(strata, kTue, traces);
    std::map<std::string, Classification> by_id;
    for (const auto& c : cands) by_id[c.taxi_id] = c.classification;
    CHECK(by_id.size() == 2);
    CHECK(by_id.at("a") == Classification::pickup_in_action_ca);
    CHECK(by_id.at("near") == Classification::no_pickup);
    CHECK(by_id.count("far") == 0);
  }

  TEST_CASE("search dyads count consecutive trip pairs") {
    const Date prev = kTue - std::chrono::days{1};
    // Drop-off 8 followed by pickups at 8, 8 and 28.
    const std::vector<TripRecord> trips{
        trip("a", prev, hm(7, 0), hm(7, 10), 1, 8),   trip("a", prev, hm(7, 20), hm(7, 30), 8, 8),
        trip("a", prev, hm(7, 40), hm(7, 50), 8, 8),  trip("a", prev, hm(8, 0), hm(8, 10), 28, 5),
        trip("b", kTue, hm(8, 0), hm(8, 10), 28, 5)};
    const auto strata = stratify_trips(trips);
    const auto dyads = build_search_dyads(strata, "a", kTue);
    const std::vector<SearchDyad> expected{{8, 8, 2}, {8, 28, 1}};
    CHECK(dyads == expected);
    CHECK(build_search_dyads(strata, "nobody", kTue).empty());
  }

  TEST_CASE("search dyads match a scripted tabulation for a 30-trip driver") {
    Rng rng = make_rng(5);
    std::vector<TripRecord> trips;
    std::map<std::pair<int, int>, int> oracle;
    for (int back = 1; back <= 10; ++back) {
      const Date day = kTue - std::chrono::days{back};
      int prev_drop = -1;
      for (int k = 0; k < 3; ++k) {
        const int from = 1 + static_cast<int>(uniform_index(rng, 77));
        const int to = 1 + static_cast<int>(uniform_index(rng, 77));
        trips.push_back(trip("z", day, hm(7, 10) + 40 * k, hm(7, 30) + 40 * k, from, to));
        if (prev_drop >= 0) ++oracle[{prev_drop, from}];
        prev_drop = to;
      }
    }
    trips.push_back(trip("z", kTue, hm(8, 0), hm(8, 1), 8, 8));
    const auto dyads = build_search_dyads(stratify_trips(trips, {StratumSpec::DayType::any}), "z", kTue);
    std::map<std::pair<int, int>, int> got;
    for (const auto& d : dyads) got[{d.from_ca, d.to_ca}] = d.weight;
    CHECK(got == oracle);
  }

  TEST_CASE("deduce_decision argmax and ties") {
    Rng rng = make_rng(1);
    const std::vector<SearchDyad> d{{8, 8, 3}, {8, 28, 1}};
    CHECK(community_area(deduce_decision(d, 8, DecisionMode::argmax, rng)) == 8);
    const std::vector<SearchDyad> tie{{8, 8, 2}, {8, 28, 2}};
    CHECK(community_area(deduce_decision(tie, 8, DecisionMode::argmax, rng)) == 8);
    // No dyad from the origin: uniform prior, argmax tie goes to CA 8.
    CHECK(community_area(deduce_decision(d, 99, DecisionMode::argmax, rng)) == 8);
  }

  TEST_CASE("weighted sampling converges to the weights") {
    Rng rng = make_rng(2);
    const std::vector<SearchDyad> d{{8, 8, 3}, {8, 28, 1}};
    int hits = 0;
    for (int i = 0; i < 10000; ++i) hits += deduce_decision(d, 8, DecisionMode::weighted_sample, rng) == District::North;
    CHECK(hits / 10000.0 == doctest::Approx(0.75).epsilon(0.02 / 0.75));
    // 3-sigma binomial bound
    CHECK(std::abs(hits - 7500) < 3 * std::sqrt(10000 * 0.75 * 0.25));
  }

  TEST_CASE("search prior falls back to the population, then uniform") {
    const std::vector<SearchDyad> own{{5, 8, 2}};
    const std::vector<SearchDyad> pop{{6, 32, 4}, {6, 77, 9}};
    auto p = search_prior(own, 5, pop);
    CHECK(p.source == PriorSource::own);
    p = search_prior(own, 6, pop);
    CHECK(p.source == PriorSource::population);
    CHECK(p.weights == PerDistrict{0, 0, 4});
    p = search_prior(own, 7, pop);
    CHECK(p.source == PriorSource::uniform);
  }

  TEST_CASE("scenario flow from deterministic candidates") {
    std::vector<CandidateDriver> cands(4);
    cands[0].prior.weights = {1, 0, 0};
    cands[1].prior.weights = {1, 0, 0};
    cands[2].prior.weights = {0, 0, 1};
    cands[3].classification = Classification::pickup_elsewhere;
    Rng rng = make_rng(0);
    const auto s = build_scenario(kTue, cands, DecisionMode::argmax, rng);
    CHECK(s.deduced_flow == FlowDistribution({2, 0, 1}));
    CHECK(s.total_drivers == 3);

    std::vector<CandidateDriver> none(1);
    none[0].classification = Classification::pickup_elsewhere;
    try {
      build_scenario(kTue, none, DecisionMode::argmax, rng);
      FAIL("expected empty_scenario");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_scenario);
    }
  }

  TEST_CASE("trace dyads, candidates and flow on a 200-driver day match a scripted back-trace") {
    const auto trips = random_corpus(200, 11, 9);
    const auto strata = stratify_trips(trips);
    const PipelineOptions opts;
    const Timestamp nine = make_timestamp(kTue, hm(9, 0));

    std::multiset<std::tuple<int, int, int>> want_dyads;
    std::map<std::pair<int, int>, int> want_tmax;
    std::map<std::string, std::pair<int, Classification>> want_cands;
    for (int d = 0; d < 200; ++d) {
      const std::string id = "T" + std::to_string(d);
      const auto mine = driver_day(trips, id, kTue);
      const TripRecord* p = nullptr;
      for (const auto& t : mine) {
        if (t.start.minute_of_day() >= hm(9, 0) && t.start.minute_of_day() < hm(9, 15)) {
          p = &t;
          break;
        }
      }
      if (p != nullptr && is_action(p->pickup_ca)) {
        const TripRecord* prev = nullptr;
        for (const auto& t : mine) {
          if (&t != p && t.end <= p->start && (prev == nullptr || t.end > prev->end)) prev = &t;
        }
        if (prev == nullptr) continue;
        const int idle = static_cast<int>(p->start.minutes - prev->end.minutes);
        want_dyads.insert({prev->dropoff_ca, p->pickup_ca, idle});
        auto& m = want_tmax[{prev->dropoff_ca, p->pickup_ca}];
        m = std::max(m, idle);
        want_cands[id] = {prev->dropoff_ca, Classification::pickup_in_action_ca};
      }
    }
    const auto traces = build_trace_dyads(strata, kTue, opts);
    std::multiset<std::tuple<int, int, int>> got_dyads;
    for (const auto& d : traces.dyads) got_dyads.insert({d.from_ca, d.to_ca, d.idle_minutes});
    CHECK(got_dyads == want_dyads);
    CHECK(traces.t_max == want_tmax);

    for (int d = 0; d < 200; ++d) {
      const std::string id = "T" + std::to_string(d);
      if (want_cands.count(id)) continue;
      const auto mine = driver_day(trips, id, kTue);
      const TripRecord* prev = nullptr;
      bool busy = false, elsewhere = false;
      for (const auto& t : mine) {
        if (t.end <= nine && (prev == nullptr || t.end > prev->end)) prev = &t;
        busy = busy || (t.start < nine && t.end > nine);
        const int m = t.start.minute_of_day();
        elsewhere = elsewhere || (m >= hm(9, 0) && m < hm(9, 15));
      }
      if (prev == nullptr) continue;
      int limit = -1;
      for (const auto& [k, v] : want_tmax) {
        if (k.first == prev->dropoff_ca) limit = std::max(limit, v);
      }
      if (limit < 0 || nine.minutes - prev->end.minutes > limit) continue;
      want_cands[id] = {prev->dropoff_ca,
                        busy || elsewhere ? Classification::pickup_elsewhere : Classification::no_pickup};
    }
    const auto cands = identify_candidates(strata, kTue, traces, opts);
    std::map<std::string, std::pair<int, Classification>> got;
    for (const auto& c : cands) got[c.taxi_id] = {c.origin_ca, c.classification};
    CHECK(got == want_cands);

    // Flow oracle: observed district, else argmax of own dyads from origin,
    // else population dyads, else uniform (ties to CA 8, then 28, then 32).
    std::map<std::pair<int, int>, int> pop;
    std::map<std::string, std::map<std::pair<int, int>, int>> own;
    for (int back = 1; back <= 10; ++back) {
      const Date day = kTue - std::chrono::days{back};
      for (int d = 0; d < 200; ++d) {
        const std::string id = "T" + std::to_string(d);
        const auto mine = driver_day(trips, id, day);
        for (std::size_t i = 0; i + 1 < mine.size(); ++i) {
          ++pop[{mine[i].dropoff_ca, mine[i + 1].pickup_ca}];
          ++own[id][{mine[i].dropoff_ca, mine[i + 1].pickup_ca}];
        }
      }
    }
    const auto pick = [](const std::map<std::pair<int, int>, int>& tab, int origin) -> int {
      int best_ca = -1, best_w = 0;
      for (int ca : {8, 28, 32}) {
        auto it = tab.find({origin, ca});
        const int w = it == tab.end() ? 0 : it->second;
        if (w > best_w) best_ca = ca, best_w = w;
      }
      return best_ca;
    };
    std::map<int, double> want_flow;
    long retained = 0;
    for (const auto& [id, v] : want_cands) {
      if (v.second == Classification::pickup_elsewhere) continue;
      ++retained;
      int ca = -1;
      if (v.second == Classification::pickup_in_action_ca) {
        for (const auto& t : driver_day(trips, id, kTue)) {
          if (t.start.minute_of_day() >= hm(9, 0)) {
            ca = t.pickup_ca;
            break;
          }
        }
      } else {
        ca = pick(own[id], v.first);
        if (ca < 0) ca = pick(pop, v.first);
        if (ca < 0) ca = 8;
      }
      want_flow[ca] += 1.0;
    }
    const auto s = ingest_day(strata, kTue, opts, DecisionMode::argmax, 1);
    CHECK(s.total_drivers == retained);
    CHECK(s.deduced_flow[District::North] == want_flow[8]);
    CHECK(s.deduced_flow[District::West] == want_flow[28]);
    CHECK(s.deduced_flow[District::East] == want_flow[32]);
  }

  TEST_CASE("property: flow conservation, threshold monotonicity, determinism") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
      const auto trips = random_corpus(80, 11, seed);
      const auto strata = stratify_trips(trips);
      const auto a = ingest_day(strata, kTue, {}, DecisionMode::weighted_sample, seed);
      const auto b = ingest_day(strata, kTue, {}, DecisionMode::weighted_sample, seed);
      CHECK(a.deduced_flow.total() == static_cast<double>(a.total_drivers));
      CHECK(a.deduced_flow == b.deduced_flow);

      auto traces = build_trace_dyads(strata, kTue);
      const auto base = identify_candidates(strata, kTue, traces);
      for (auto& [_, t] : traces.t_max) t += 7;
      const auto grown = identify_candidates(strata, kTue, traces);
      std::set<std::string> grown_ids;
      for (const auto& c : grown) grown_ids.insert(c.taxi_id);
      for (const auto& c : base) CHECK(grown_ids.count(c.taxi_id) == 1);
    }
  }

  TEST_CASE("trip CSV round-trip and validation") {
    const std::vector<TripRecord> trips{trip("a", kTue, hm(8, 0), hm(8, 10), 8, 28)};
    std::stringstream ss;
    write_trips(ss, {trips[0]});
    CHECK(read_trips(ss) == std::vector<TripRecord>{trips[0]});
    CHECK_THROWS_AS(validate_trip(trip("a", kTue, hm(9, 0), hm(8, 0), 8, 8)), Error);
    CHECK_THROWS_AS(validate_trip(trip("a", kTue, hm(8, 0), hm(9, 0), 0, 8)), Error);
    CHECK(format_timestamp(parse_timestamp("2014-07-22 08:05:00")) == "2014-07-22T08:05:00");

    std::stringstream reordered("pickup_ca,taxi_id,dropoff_ca,end_ts,start_ts\n8,q,28,2014-07-22T08:10,2014-07-22T08:00\n");
    const auto r = read_trips(reordered);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == trip("q", kTue, hm(8, 0), hm(8, 10), 8, 28));
  }
}
