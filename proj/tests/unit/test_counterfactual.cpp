#include <doctest.h>

#include <cmath>

#include "cglab/counterfactual.hpp"

using namespace cglab;

namespace {

CounterfactualModel identity_model(double flow_min = 1.0, double flow_max = 1000.0) {
  CounterfactualModel m;
  for (auto& c : m.districts) c = {0.0, 1.0, flow_min, flow_max};
  return m;
}

std::vector<TrainingObservation> loglinear(double a, double b, double sigma, int days, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<TrainingObservation> out;
  for (int k = 0; k < days; ++k) {
    for (District d : kAllDistricts) {
      const double flow = 20.0 + 280.0 * uniform01(rng);
      const double pickups = std::exp(a + b * std::log(flow) + sigma * standard_normal(rng));
      out.push_back({d, flow, std::max(1.0, pickups)});
    }
  }
  return out;
}

DecisionScenario scenario_with_priors(const std::vector<PerDistrict>& priors) {
  DecisionScenario s;
  for (const auto& p : priors) {
    CandidateDriver c;
    c.prior.weights = p;
    s.candidates.push_back(c);
  }
  s.total_drivers = static_cast<long>(priors.size());
  return s;
}

}  // namespace

TEST_SUITE("counterfactual") {
  TEST_CASE("perfect log-linear data") {
    std::vector<TrainingObservation> data;
    for (District d : kAllDistricts) {
      for (double f : {5.0, 20.0, 80.0, 300.0}) data.push_back({d, f, f});
    }
    const auto m = fit(data);
    for (const auto& c : m.districts) {
      CHECK(c.intercept == doctest::Approx(0.0).epsilon(1e-9));
      CHECK(c.slope == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(c.flow_min == 5.0);
      CHECK(c.flow_max == 300.0);
    }
    CHECK(m.sigma < 1e-6);
  }

  TEST_CASE("pooling identical districts changes nothing") {
    const auto base = loglinear(0.5, 0.8, 0.1, 40, 3);
    std::vector<TrainingObservation> data;
    for (District d : kAllDistricts) {
      for (std::size_t i = 0; i < base.size(); i += 3) data.push_back({d, base[i].flow, base[i].pickups});
    }
    const auto none = fit(data, Shrinkage::none);
    const auto pooled = fit(data, Shrinkage::pooled);
    for (std::size_t d = 0; d < kDistricts; ++d) {
      CHECK(pooled.districts[d].slope == doctest::Approx(none.districts[d].slope).epsilon(1e-9));
      CHECK(pooled.districts[d].intercept == doctest::Approx(none.districts[d].intercept).epsilon(1e-9));
    }
  }

  TEST_CASE("slope recovery on 221 days") {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto m = fit(loglinear(0.5, 0.8, 0.1, 221, seed), Shrinkage::pooled);
      for (const auto& c : m.districts) CHECK(std::abs(c.slope - 0.8) <= 0.05);
      CHECK(m.sigma == doctest::Approx(0.1).epsilon(0.2));
    }
  }

  TEST_CASE("degenerate training data") {
    std::vector<TrainingObservation> flat;
    for (District d : kAllDistricts) {
      for (int i = 0; i < 4; ++i) flat.push_back({d, 10.0, 5.0 + i});
    }
    try {
      fit(flat);
      FAIL("expected degenerate_training");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::degenerate_training);
    }
    std::vector<TrainingObservation> few{{District::West, 5, 3}, {District::West, 9, 4}};
    CHECK_THROWS_AS(fit(few), Error);
  }

  TEST_CASE("boundary heuristics") {
    const auto m = identity_model(20.0, 100.0);
    CHECK(predict_pickups(m, District::West, 50.0) == doctest::Approx(50.0).epsilon(1e-9));

    // Below flow_min the model may over-predict; pickups cap at the flow.
    auto over = identity_model(20.0, 100.0);
    over.districts[0].intercept = std::log(1.4);
    CHECK(predict_pickups(over, District::West, 10.0) == 10.0);
    CHECK(pickup_probability(over, FlowDistribution({10.0, 0.0, 0.0}))[0] == 1.0);

    auto sub = identity_model(20.0, 100.0);
    sub.districts[1].slope = 0.7;
    CHECK(predict_pickups(sub, District::North, 200.0) == predict_pickups(sub, District::North, 100.0));
    const double below = predict_pickups(sub, District::North, std::nextafter(100.0, 0.0));
    const double above = predict_pickups(sub, District::North, std::nextafter(100.0, 1e9));
    CHECK(std::abs(below - above) <= 1e-9);
    CHECK(predict_pickups(sub, District::North, 0.0) == 0.0);
  }

  TEST_CASE("probability conversion") {
    CHECK(pickup_probability(40.0, 50.0) == doctest::Approx(0.8));
    CHECK(pickup_probability(60.0, 50.0) == 1.0);
    CHECK(pickup_probability(0.0, 0.0) == 1.0);
  }

  TEST_CASE("property: probability bounds, no overconversion, monotone for slope < 1") {
    CounterfactualModel m;
    m.districts = {DistrictCoefficients{0.9, 0.7, 5.0, 250.0}, DistrictCoefficients{0.4, 0.95, 5.0, 250.0},
                   DistrictCoefficients{1.8, 0.5, 5.0, 250.0}};
    m.sigma = 0.2;
    for (District d : kAllDistricts) {
      double prev = 2.0;
      for (double f = 0.0; f <= 400.0; f += 0.5) {
        const double p = predict_pickups(m, d, f);
        CHECK(p <= f);
        const double prob = pickup_probability(p, f);
        CHECK(prob >= 0.0);
        CHECK(prob <= 1.0);
        if (f >= 5.0 && f <= 250.0) {
          CHECK(prob <= prev + 1e-12);
          prev = prob;
        }
      }
    }
  }

  TEST_CASE("posterior samples average to the mean-mode prediction") {
    CounterfactualModel m = identity_model(1.0, 500.0);
    for (auto& c : m.districts) c.slope = 0.7;
    m.sigma = 0.1;
    const FlowDistribution flow({100.0, 100.0, 100.0});
    const auto mean = predict_pickups(m, flow);
    Rng rng = make_rng(4);
    const int n = 10000;
    PerDistrict sum{}, sq{};
    for (int i = 0; i < n; ++i) {
      const auto p = predict_pickups(m, flow, DrawMode::posterior_sample, rng);
      for (std::size_t k = 0; k < kDistricts; ++k) {
        sum[k] += p[k];
        sq[k] += p[k] * p[k];
      }
    }
    for (std::size_t k = 0; k < kDistricts; ++k) {
      const double avg = sum[k] / n;
      const double se = std::sqrt((sq[k] / n - avg * avg) / n);
      CHECK(std::abs(avg - mean[k]) <= 3.0 * se);
    }
  }

  TEST_CASE("deterministic priors give identical frames") {
    const auto s = scenario_with_priors({{1, 0, 0}, {0, 1, 0}, {0, 0, 2}, {0, 0, 1}});
    const auto set = simulate_hypothetical_outcomes(s, identity_model(), {50, false}, 1);
    REQUIRE(set.frames.size() == 50);
    for (const auto& f : set.frames) CHECK(f.flow == FlowDistribution({1, 1, 2}));
  }

  TEST_CASE("simulation is deterministic and frame means match the analytic expectation") {
    std::vector<PerDistrict> priors;
    for (int i = 0; i < 300; ++i) priors.push_back({1.0 + i % 3, 1.0, 0.5 + (i % 5)});
    const auto s = scenario_with_priors(priors);
    CounterfactualModel m = identity_model();
    for (auto& c : m.districts) c.slope = 0.8;
    const auto a = simulate_hypothetical_outcomes(s, m, {}, 9);
    const auto b = simulate_hypothetical_outcomes(s, m, {}, 9);
    REQUIRE(a.frames.size() == 1000);
    for (std::size_t f = 0; f < a.frames.size(); ++f) {
      CHECK(a.frames[f].flow == b.frames[f].flow);
      CHECK(a.frames[f].probability == b.frames[f].probability);
    }
    PerDistrict expect{}, var{};
    for (const auto& p : priors) {
      const double t = p[0] + p[1] + p[2];
      for (std::size_t k = 0; k < kDistricts; ++k) {
        expect[k] += p[k] / t;
        var[k] += p[k] / t * (1 - p[k] / t);
      }
    }
    const auto display = summarize_display(a, DisplayKind::static_point);
    for (std::size_t k = 0; k < kDistricts; ++k) {
      const double se = std::sqrt(var[k] / 1000.0);
      CHECK(std::abs(display.mean_flow.at(k) - expect[k]) <= 3.0 * se);
    }
  }

  TEST_CASE("display summaries") {
    HypotheticalOutcomeSet two;
    two.frames.resize(2);
    two.frames[0].probability = {0.4, 0.2, 1.0};
    two.frames[1].probability = {0.6, 0.2, 0.0};
    const auto st = summarize_display(two, DisplayKind::static_point);
    CHECK(st.mean_probability[0] == doctest::Approx(0.5));
    CHECK(st.frames.empty());
    const auto hops = summarize_display(two, DisplayKind::hops_frames);
    CHECK(hops.frames.size() == 2);
    CHECK(hops.frame_interval == 0.2);
    CHECK_THROWS_AS(summarize_display(HypotheticalOutcomeSet{}, DisplayKind::static_point), Error);

    // Independent second pass over a simulated set.
    std::vector<PerDistrict> priors(40, PerDistrict{1, 2, 3});
    const auto set = simulate_hypothetical_outcomes(scenario_with_priors(priors), identity_model(), {200, false}, 2);
    const auto payload = summarize_display(set, DisplayKind::hops_frames);
    for (std::size_t k = 0; k < kDistricts; ++k) {
      double pf = 0.0, pp = 0.0;
      for (std::size_t f = set.frames.size(); f-- > 0;) {
        pf += set.frames[f].flow.at(k);
        pp += set.frames[f].probability[k];
      }
      CHECK(payload.mean_flow.at(k) == doctest::Approx(pf / 200).epsilon(1e-12));
      CHECK(payload.mean_probability[k] == doctest::Approx(pp / 200).epsilon(1e-12));
    }
  }

  TEST_CASE("model validation") {
    auto m = identity_model();
    CHECK_NOTHROW(m.validate());
    m.districts[2].flow_min = 0.5;
    CHECK_THROWS_AS(m.validate(), Error);
    m = identity_model();
    m.sigma = 0.0;
    CHECK_THROWS_AS(m.validate(), Error);
  }
}
