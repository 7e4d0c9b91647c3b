#include <doctest.h>

#include <sstream>

#include "cglab/pipeline.hpp"
#include "cglab/synthetic.hpp"

using namespace cglab;

TEST_SUITE("synthetic") {
  TEST_CASE("same seed gives byte-identical corpora") {
    SyntheticConfig c;
    c.drivers = 120;
    c.days = 6;
    c.seed = 7;
    std::stringstream a, b;
    write_trips(a, generate_synthetic(c));
    write_trips(b, generate_synthetic(c));
    CHECK(a.str() == b.str());
    c.seed = 8;
    std::stringstream other;
    write_trips(other, generate_synthetic(c));
    CHECK(other.str() != a.str());
  }

  TEST_CASE("zero drivers or days is an error") {
    SyntheticConfig c;
    c.drivers = 0;
    CHECK_THROWS_AS(generate_synthetic(c), Error);
    c.drivers = 10;
    c.days = 0;
    CHECK_THROWS_AS(generate_synthetic(c), Error);
  }

  TEST_CASE("deduced flow shares track the configured skew for 5000 drivers") {
    SyntheticConfig c;
    c.drivers = 5000;
    c.days = 11;
    c.seed = 7;
    const auto trips = generate_synthetic(c);
    const auto strata = stratify_trips(trips);
    const auto days = select_target_days(strata, [](Date) { return true; });
    REQUIRE(days.size() == 11);
    const auto s = ingest_day(strata, days.back(), {}, DecisionMode::argmax, 1);
    const auto shares = s.deduced_flow.shares();
    for (std::size_t k = 0; k < kDistricts; ++k) {
      CAPTURE(k);
      CHECK(std::abs(shares[k] - c.skew[k]) <= 0.03);
    }
  }

  TEST_CASE("explicit dates are generated exactly") {
    SyntheticConfig c;
    c.drivers = 50;
    c.dates = {parse_date("2014-07-22"), parse_date("2014-05-13")};
    const auto strata = stratify_trips(generate_synthetic(c));
    const auto days = select_target_days(strata, [](Date) { return true; });
    CHECK(days == std::vector<Date>{parse_date("2014-05-13"), parse_date("2014-07-22")});
  }

  TEST_CASE("pickup law probabilities stay in [0, 1]") {
    const PickupLaw law;
    for (District d : kAllDistricts) {
      CHECK(law.probability(d, 0.0) == 1.0);
      for (double f : {0.5, 1.0, 10.0, 300.0, 5000.0}) {
        const double p = law.probability(d, f);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(law.expected_pickups(d, f) <= f);
      }
    }
  }

  TEST_CASE("calibrated day skew realizes the requested best responses") {
    const PickupLaw law;
    const double belief[] = {0.4, 0.6};
    for (auto target : {TrialTarget{District::West, District::East}, TrialTarget{District::North, District::East}}) {
      const auto s = calibrate_day_skew(law, 600, target, belief);
      PerDistrict p0{}, p2{};
      for (std::size_t k = 0; k < kDistricts; ++k) {
        CHECK(s[k] >= 0.12 - 1e-12);
        p0[k] = law.probability(district_at(k), 600 * s[k]);
      }
      for (std::size_t k = 0; k < kDistricts; ++k) {
        const double flow = 600 * 0.4 * s[k] + (district_at(k) == target.l1_best ? 600 * 0.6 : 0.0);
        p2[k] = law.probability(district_at(k), flow);
      }
      CHECK(argmax_district(p0) == target.l1_best);
      CHECK(argmax_district(p2) == target.l2_best);
    }
    CHECK_THROWS_AS(calibrate_day_skew(law, 600, {District::West, District::West}, belief), Error);
  }
}
