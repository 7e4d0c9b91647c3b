#include "cglab/outcomes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cglab {

L0Sampler::L0Sampler(const DecisionScenario& scenario) {
  cumulative_.reserve(scenario.candidates.size());
  for (const auto& c : scenario.candidates) {
    const auto& w = c.prior.weights;
    const double total = w[0] + w[1] + w[2];
    if (!(total > 0.0)) throw Error(Errc::invalid_argument, "candidate has an empty search prior");
    cumulative_.push_back({w[0] / total, (w[0] + w[1]) / total, 1.0});
  }
  if (cumulative_.empty()) throw Error(Errc::empty_scenario, "empty scenario");
}

District L0Sampler::draw(Rng& rng) const {
  const auto& c = cumulative_[uniform_index(rng, cumulative_.size())];
  const double u = uniform01(rng);
  return district_at(u < c[0] ? 0 : (u < c[1] ? 1 : 2));
}

PerDistrict L0Sampler::expected_shares() const {
  PerDistrict out{};
  for (const auto& c : cumulative_) {
    out[0] += c[0];
    out[1] += c[1] - c[0];
    out[2] += 1.0 - c[1];
  }
  for (double& x : out) x /= static_cast<double>(cumulative_.size());
  return out;
}

LevelOutcome level_specific_outcome(LevelK level, const DecisionScenario& scenario,
                                    std::span<const District> l1_pool,
                                    const CounterfactualModel& model, const MixtureBelief& belief,
                                    int replicates, std::uint64_t seed) {
  LevelOutcome out;
  out.level = level;
  if (level.k == 1) {
    out.expected_flow = scenario.deduced_flow;
    out.source = OutcomeSource::l0_data;
    out.pickup_probabilities = pickup_probability(model, out.expected_flow);
    return out;
  }
  if (level.k != 2) throw Error(Errc::invalid_argument, "level-specific outcomes exist for levels 1 and 2");
  if (l1_pool.empty()) {
    throw Error(Errc::staging_violation, "staging violation: L2 outcome needs a frozen L1 pool");
  }
  if (belief.proportions.size() != 2) throw Error(Errc::invalid_argument, "L2 belief must cover levels 0 and 1");
  if (replicates <= 0) throw Error(Errc::invalid_argument, "replicate count must be positive");

  const long n = std::lround(scenario.deduced_flow.total());
  const auto counts = apportion_largest_remainder(belief.proportions, n);
  const L0Sampler l0(scenario);
  PerDistrict sum{};
  for (int r = 0; r < replicates; ++r) {
    Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    for (long i = 0; i < counts[0]; ++i) sum[index(l0.draw(rng))] += 1.0;
    for (long i = 0; i < counts[1]; ++i) sum[index(l1_pool[uniform_index(rng, l1_pool.size())])] += 1.0;
  }
  for (double& x : sum) x /= static_cast<double>(replicates);
  out.expected_flow = FlowDistribution(sum);
  out.source = OutcomeSource::l0_plus_l1_mixture;
  out.pickup_probabilities = pickup_probability(model, out.expected_flow);
  return out;
}

Score score_decision(District chosen, const LevelOutcome& outcome, Rng& rng) {
  Score s;
  s.got_pickup = bernoulli(rng, outcome.pickup_probabilities[index(chosen)]);
  s.reward_delta = s.got_pickup ? kPickupBonus : Cents{0};
  return s;
}

std::vector<Score> score_capacity_lottery(std::span<const District> choices,
                                          const LevelOutcome& outcome, Rng& rng) {
  std::vector<Score> scores(choices.size());
  for (District d : kAllDistricts) {
    std::vector<std::size_t> choosers;
    for (std::size_t i = 0; i < choices.size(); ++i) {
      if (choices[i] == d) choosers.push_back(i);
    }
    const auto winners = static_cast<std::size_t>(std::lround(
        outcome.pickup_probabilities[index(d)] * static_cast<double>(choosers.size())));
    for (std::size_t w = 0; w < winners && w < choosers.size(); ++w) {
      std::swap(choosers[w], choosers[w + uniform_index(rng, choosers.size() - w)]);
      scores[choosers[w]] = {true, kPickupBonus};
    }
  }
  return scores;
}

FeedbackPayload make_feedback(FeedbackStructure structure, const Score& score,
                              const DisplayPayload& display, const LevelOutcome& outcome,
                              const FlowDistribution& anticipated) {
  FeedbackPayload p;
  p.structure = structure;
  p.got_pickup = score.got_pickup;
  p.reward_delta = score.reward_delta;
  if (structure == FeedbackStructure::bandit) return p;

  FullFeedback f;
  f.displayed_flow = display.mean_flow;
  f.displayed_probability = display.mean_probability;
  f.outcome = outcome;
  f.anticipated_flow = anticipated;
  const FlowDistribution realized_c = outcome.expected_flow.rescaled(anticipated.total());
  for (std::size_t i = 0; i < kDistricts; ++i) {
    f.prediction_error[i] = outcome.expected_flow.at(i) - display.mean_flow.at(i);
    f.anticipation_error[i] = realized_c.at(i) - anticipated.at(i);
  }
  p.full = std::move(f);
  return p;
}

SystemOutcomeSet system_outcome(const DecisionScenario& scenario, const LevelSplit& split,
                                std::span<const District> l1_pool, std::span<const District> l2_pool,
                                const CounterfactualModel& model, int replicates,
                                std::uint64_t seed) {
  if (replicates <= 0) throw Error(Errc::invalid_argument, "replicate count must be positive");
  SystemOutcomeSet set;
  set.level_counts = level_counts(split, std::lround(scenario.deduced_flow.total()));
  if (set.level_counts.size() > 3) {
    throw Error(Errc::invalid_argument, "system outcomes support levels 0 to 2");
  }
  const auto count = [&](std::size_t k) { return k < set.level_counts.size() ? set.level_counts[k] : 0L; };
  if ((count(1) > 0 && l1_pool.empty()) || (count(2) > 0 && l2_pool.empty())) {
    throw Error(Errc::staging_violation, "staging violation: system outcome needs frozen L1 and L2 pools");
  }

  const L0Sampler l0(scenario);
  set.replicates.resize(static_cast<std::size_t>(replicates));
  for (std::size_t r = 0; r < set.replicates.size(); ++r) {
    Rng rng = make_rng(derive_seed(seed, {r}));
    PerDistrict flow{};
    for (long i = 0; i < count(0); ++i) flow[index(l0.draw(rng))] += 1.0;
    for (long i = 0; i < count(1); ++i) flow[index(l1_pool[uniform_index(rng, l1_pool.size())])] += 1.0;
    for (long i = 0; i < count(2); ++i) flow[index(l2_pool[uniform_index(rng, l2_pool.size())])] += 1.0;
    auto& rep = set.replicates[r];
    rep.flow = FlowDistribution(flow);
    const PerDistrict mean = predict_pickups(model, rep.flow);
    for (std::size_t d = 0; d < kDistricts; ++d) {
      rep.pickups[d] = std::clamp(std::round(mean[d]), 0.0, flow[d]);
    }
  }
  return set;
}

}  // namespace cglab
