#include <doctest.h>

#include <cmath>

#include "cglab/welfare.hpp"
#include "oracles/welfare_oracle.hpp"

using namespace cglab;

namespace {

CounterfactualModel toy_model(Rng& rng, double n) {
  CounterfactualModel m;
  for (auto& c : m.districts) {
    c.intercept = -0.5 + 1.0 * uniform01(rng);
    c.slope = 0.3 + 0.6 * uniform01(rng);
    c.flow_min = 1.0;
    c.flow_max = n;
  }
  m.sigma = 0.05;
  return m;
}

PickupFunction model_pickups(const CounterfactualModel& m) {
  return [m](const PerDistrict& x) {
    double t = 0.0;
    for (District d : kAllDistricts) t += predict_pickups(m, d, x[index(d)]);
    return t;
  };
}

}  // namespace

TEST_SUITE("welfare") {
  TEST_CASE("identity model: every feasible flow is optimal") {
    CounterfactualModel m;
    for (auto& c : m.districts) c = {0.0, 1.0, 1.0, 1000.0};
    const auto r = max_welfare(90.0, m);
    CHECK(r.max_pickups == doctest::Approx(90.0).epsilon(1e-6));
    CHECK(r.optimal_flow.total() == doctest::Approx(90.0).epsilon(1e-9));
  }

  TEST_CASE("toy concave models match the integer grid within 0.5%") {
    Rng rng = make_rng(17);
    for (int i = 0; i < 10; ++i) {
      const int n = 40 + static_cast<int>(uniform_index(rng, 61));
      const auto m = toy_model(rng, n);
      const WelfareBounds box{{0, 0, 0}, {double(n), double(n), double(n)}};
      const auto r = max_welfare(n, m, box, {}, static_cast<std::uint64_t>(i));
      const auto grid = oracle::grid_welfare(n, model_pickups(m), box);
      CAPTURE(n);
      CHECK(r.max_pickups >= grid.pickups * (1.0 - 0.005));
      CHECK(r.optimal_flow.total() == doctest::Approx(n).epsilon(1e-9));
      for (double v : r.restart_pickups) CHECK(r.max_pickups >= v);
    }
  }

  TEST_CASE("historical bounds are honored") {
    CounterfactualModel m;
    m.districts = {DistrictCoefficients{1.0, 0.5, 10.0, 30.0}, DistrictCoefficients{0.2, 0.8, 5.0, 40.0},
                   DistrictCoefficients{0.0, 0.9, 5.0, 40.0}};
    const auto b = historical_bounds(m);
    const auto r = max_welfare(60.0, m, b, {}, 3);
    for (std::size_t k = 0; k < kDistricts; ++k) {
      CHECK(r.optimal_flow.at(k) >= b.lower[k] - 1e-9);
      CHECK(r.optimal_flow.at(k) <= b.upper[k] + 1e-9);
    }
    const auto grid = oracle::grid_welfare(60, model_pickups(m), b);
    CHECK(r.max_pickups >= grid.pickups * 0.995);
  }

  TEST_CASE("same seed gives the same optimum") {
    Rng rng = make_rng(2);
    const auto m = toy_model(rng, 80);
    const WelfareBounds box{{0, 0, 0}, {80, 80, 80}};
    const auto a = max_welfare(80, m, box, {}, 9);
    const auto b = max_welfare(80, m, box, {}, 9);
    CHECK(a.max_pickups == b.max_pickups);
    CHECK(a.optimal_flow == b.optimal_flow);
    CHECK(a.restart_pickups == b.restart_pickups);
  }

  TEST_CASE("infeasible bounds") {
    CounterfactualModel m;
    for (auto& c : m.districts) c = {0.0, 0.8, 10.0, 20.0};
    for (double n : {20.0, 70.0}) {
      try {
        max_welfare(n, m);
        FAIL("expected constraint_set_empty");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::constraint_set_empty);
      }
      bool relaxed = false;
      const auto b = feasible_bounds(m, n, relaxed);
      CHECK(relaxed);
      CHECK(b.upper[0] == n);
      CHECK_NOTHROW(max_welfare(n, m, b, {}, 0));
    }
    bool relaxed = true;
    feasible_bounds(m, 45.0, relaxed);
    CHECK_FALSE(relaxed);
  }

  TEST_CASE("projection lands on the feasible set") {
    Rng rng = make_rng(5);
    const WelfareBounds b{{1, 2, 0}, {10, 30, 25}};
    for (int i = 0; i < 500; ++i) {
      const PerDistrict f{uniform01(rng) * 60 - 10, uniform01(rng) * 60 - 10, uniform01(rng) * 60 - 10};
      const double total = 3.0 + 60.0 * uniform01(rng);
      const auto p = project_to_feasible(f, b, total);
      CHECK(p[0] + p[1] + p[2] == doctest::Approx(total).epsilon(1e-12));
      for (std::size_t k = 0; k < kDistricts; ++k) {
        CHECK(p[k] >= b.lower[k]);
        CHECK(p[k] <= b.upper[k]);
      }
    }
  }
}
