#include "cglab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cglab/outcomes.hpp"

namespace cglab {

Perceived perceive(const DisplayPayload& payload, const PerceptionModel& model, Rng& rng) {
  if (model.kind == PerceptionKind::sampled_frames && model.frames_observed < 1) {
    throw Error(Errc::invalid_argument, "frames_observed must be at least 1");
  }
  if (payload.kind == DisplayKind::static_point) {
    return {payload.mean_flow, payload.mean_probability};
  }
  if (model.kind == PerceptionKind::exact_static) {
    throw Error(Errc::perception_mismatch, "perception/display mismatch");
  }
  const std::size_t n = payload.frames.size();
  if (n == 0) throw Error(Errc::invalid_argument, "hops payload has no frames");
  const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(model.frames_observed));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (k < n) {
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(order[i], order[i + uniform_index(rng, n - i)]);
    }
  }
  PerDistrict flow{}, prob{};
  for (std::size_t i = 0; i < k; ++i) {
    const auto& fr = payload.frames[order[i]];
    for (std::size_t d = 0; d < kDistricts; ++d) {
      flow[d] += fr.flow.at(d);
      prob[d] += fr.probability[d];
    }
  }
  for (std::size_t d = 0; d < kDistricts; ++d) {
    flow[d] /= static_cast<double>(k);
    prob[d] /= static_cast<double>(k);
  }
  return {FlowDistribution(flow), prob};
}

PerDistrict choice_probabilities(const PerDistrict& values, double temperature, const ActionSet& set) {
  PerDistrict p{};
  if (temperature <= 0.0) {
    p[index(argmax_district(values, set))] = 1.0;
    return p;
  }
  const double top = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (std::size_t i = 0; i < kDistricts; ++i) {
    p[i] = std::exp((values[i] - top) / temperature);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

namespace {

District sample_choice(const PerDistrict& values, double temperature, Rng& rng) {
  if (temperature <= 0.0) return argmax_district(values);
  const PerDistrict p = choice_probabilities(values, temperature);
  double u = uniform01(rng);
  for (std::size_t i = 0; i < kDistricts; ++i) {
    if (u < p[i]) return district_at(i);
    u -= p[i];
  }
  return district_at(kDistricts - 1);
}

FlowDistribution apportioned(const FlowDistribution& flow, long total) {
  const PerDistrict shares = flow.shares();
  const auto counts = apportion_largest_remainder(shares, total);
  return FlowDistribution(PerDistrict{static_cast<double>(counts[0]), static_cast<double>(counts[1]),
                                      static_cast<double>(counts[2])});
}

}  // namespace

Decision decide(const AgentState& state, const Perceived& perceived, const DecisionContext& context,
                const CounterfactualModel& model, Rng& rng) {
  const int level = state.effective_level();
  if (level != 1 && level != 2) throw Error(Errc::invalid_argument, "agents must be level 1 or 2");
  if (context.competitor_count < 0) throw Error(Errc::invalid_argument, "negative competitor count");
  const double c = static_cast<double>(context.competitor_count);

  Decision out;
  PerDistrict base{};
  if (level == 1) {
    base = perceived.flow.rescaled(c).counts();
  } else {
    if (state.belief.proportions.size() != 2) {
      throw Error(Errc::invalid_argument, "L2 belief must cover levels 0 and 1");
    }
    const PerDistrict l0 = perceived.flow.shares();
    const PerDistrict l1 =
        state.l1_prediction == L1Prediction::display_argmax
            ? choice_probabilities(perceived.probability, 0.0)
            : choice_probabilities(perceived.probability, state.l1_prediction_temperature);
    for (std::size_t i = 0; i < kDistricts; ++i) {
      base[i] = c * (state.belief.proportions[0] * l0[i] + state.belief.proportions[1] * l1[i]);
    }
  }
  if (state.pinned_flow) base = state.pinned_flow->rescaled(c).counts();
  out.base_flow = FlowDistribution(base);

  PerDistrict believed{};
  for (std::size_t i = 0; i < kDistricts; ++i) {
    believed[i] = std::max(0.0, base[i] + c * state.share_offset[i]);
  }
  out.believed_flow = FlowDistribution(believed).rescaled(c);
  out.anticipated_flow = apportioned(out.believed_flow, context.competitor_count);

  if (level == 1) {
    out.values = perceived.probability;
  } else {
    out.values = pickup_probability(model, out.believed_flow.rescaled(context.scenario_drivers));
  }
  for (std::size_t i = 0; i < kDistricts; ++i) out.values[i] += state.arm_bias[i];
  out.chosen = sample_choice(out.values, state.temperature, rng);
  return out;
}

AgentState update_beliefs(const AgentState& state, const Decision& decision,
                          const FeedbackPayload& feedback) {
  AgentState next = state;
  if (feedback.got_pickup) {
    next.cumulative_reward.value += kPickupBonus.value;
    ++next.pickups;
  }
  const double eta = state.learning_rate;
  if (eta <= 0.0) return next;

  if (feedback.structure == FeedbackStructure::full && feedback.full) {
    const double c = decision.anticipated_flow.total();
    const PerDistrict realized = feedback.full->outcome.expected_flow.rescaled(c).counts();
    PerDistrict belief{};
    for (std::size_t i = 0; i < kDistricts; ++i) {
      belief[i] = (1.0 - eta) * decision.believed_flow.at(i) + eta * realized[i];
      next.share_offset[i] = c > 0.0 ? (belief[i] - decision.base_flow.at(i)) / c : 0.0;
    }
    next.flow_belief = FlowDistribution(belief);
  } else {
    const auto i = index(decision.chosen);
    const double reward = feedback.got_pickup ? 1.0 : 0.0;
    next.arm_bias[i] += eta * (reward - decision.values[i]);
    next.flow_belief = decision.believed_flow;
  }
  return next;
}

}  // namespace cglab
