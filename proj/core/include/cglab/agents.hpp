#pragma once

#include <optional>
#include <string>

#include "cglab/counterfactual.hpp"
#include "cglab/levels.hpp"
#include "cglab/rng.hpp"
#include "cglab/types.hpp"

namespace cglab {

struct FeedbackPayload;

enum class PerceptionKind { exact_static, sampled_frames };

struct PerceptionModel {
  PerceptionKind kind = PerceptionKind::exact_static;
  /// Frames looked at, drawn without replacement; a count at or above the
  /// payload's frame count averages every frame.
  int frames_observed = 10;
};

struct Perceived {
  FlowDistribution flow;
  PerDistrict probability{};
};

/// Static payloads are read verbatim under either kind. Throws
/// Error(perception_mismatch) for a hops payload under exact_static, and
/// Error(invalid_argument) when frames_observed < 1.
Perceived perceive(const DisplayPayload& payload, const PerceptionModel& model, Rng& rng);

/// How an L2 agent predicts L1 play.
enum class L1Prediction { display_argmax, softmax };

struct AgentState {
  std::string id;
  LevelK level{1};
  MixtureBelief belief;
  /// Endowment failure: an L2 that plays as an L1.
  bool acts_as_l1 = false;
  double temperature = 0.0;
  double learning_rate = 0.0;
  PerceptionModel perception;
  L1Prediction l1_prediction = L1Prediction::display_argmax;
  double l1_prediction_temperature = 0.1;

  /// Believed competitor flow after the last update (sums to the competitor
  /// count used on that trial; empty before the first trial).
  FlowDistribution flow_belief;
  /// Learned per-district correction to the belief's base shares.
  PerDistrict share_offset{};
  /// Learned per-district value correction (bandit feedback).
  PerDistrict arm_bias{};
  /// When set, replaces the belief-derived competitor flow (rescaled to the
  /// competitor count); used to hand an agent the true mixture.
  std::optional<FlowDistribution> pinned_flow;

  Cents cumulative_reward = kBasePay;
  long pickups = 0;

  int effective_level() const { return acts_as_l1 ? 1 : level.k; }
};

struct DecisionContext {
  /// Drivers in the scenario (the flow scale of the payoff model).
  double scenario_drivers = 0.0;
  /// Competitors the agent anticipates (the elicitation sum).
  long competitor_count = 0;
};

struct Decision {
  District chosen = District::West;
  /// Integer competitor flow summing to the competitor count.
  FlowDistribution anticipated_flow;
  /// Real-valued flows behind the anticipation.
  FlowDistribution believed_flow;
  FlowDistribution base_flow;
  PerDistrict values{};
};

/// Pure given (state, inputs, rng). Throws Error(invalid_argument) for a
/// level outside {1, 2} or a negative competitor count.
Decision decide(const AgentState& state, const Perceived& perceived, const DecisionContext& context,
                const CounterfactualModel& model, Rng& rng);

/// Softmax over values / temperature; temperature 0 is the argmax
/// (ties to the smallest CA code).
PerDistrict choice_probabilities(const PerDistrict& values, double temperature,
                                 const ActionSet& set = default_action_set());

/// Applies the trial's reward and, for learning_rate > 0, the feedback rule:
/// full moves flow_belief toward the realized level-specific flow, bandit
/// nudges the chosen district's value toward the 0/1 reward.
AgentState update_beliefs(const AgentState& state, const Decision& decision,
                          const FeedbackPayload& feedback);

}  // namespace cglab
