#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cglab/agents.hpp"
#include "cglab/counterfactual.hpp"
#include "cglab/levels.hpp"
#include "cglab/pipeline.hpp"
#include "cglab/types.hpp"

namespace cglab {

enum class OutcomeSource { l0_data, l0_plus_l1_mixture };

struct LevelOutcome {
  LevelK level{1};
  FlowDistribution expected_flow;
  PerDistrict pickup_probabilities{};
  OutcomeSource source = OutcomeSource::l0_data;
};

/// Draws L0 decisions: a uniformly chosen candidate, then that candidate's
/// search prior.
class L0Sampler {
 public:
  explicit L0Sampler(const DecisionScenario& scenario);
  District draw(Rng& rng) const;
  /// Analytic mean shares, (1/M) sum of normalized priors.
  PerDistrict expected_shares() const;

 private:
  std::vector<PerDistrict> cumulative_;
};

inline constexpr int kDefaultOutcomeReplicates = 1000;
inline constexpr int kDefaultSystemReplicates = 500;

/// Level 1 scores against the deduced flow. Level 2 averages R replicates of
/// belief-apportioned L0 draws plus L1 decisions resampled from the pool.
/// Throws Error(staging_violation) for level 2 with an empty pool.
LevelOutcome level_specific_outcome(LevelK level, const DecisionScenario& scenario,
                                    std::span<const District> l1_pool,
                                    const CounterfactualModel& model, const MixtureBelief& belief,
                                    int replicates, std::uint64_t seed);

enum class ScoringMode { bernoulli, capacity_lottery };

struct Score {
  bool got_pickup = false;
  Cents reward_delta{};
};

Score score_decision(District chosen, const LevelOutcome& outcome, Rng& rng);

/// Capacity alternative: among the agents choosing each district exactly
/// round(probability x choosers) win, drawn without replacement.
std::vector<Score> score_capacity_lottery(std::span<const District> choices,
                                          const LevelOutcome& outcome, Rng& rng);

struct FullFeedback {
  FlowDistribution displayed_flow;
  PerDistrict displayed_probability{};
  LevelOutcome outcome;
  FlowDistribution anticipated_flow;
  /// outcome.expected_flow - displayed_flow; negative = display over-estimated.
  PerDistrict prediction_error{};
  /// outcome.expected_flow rescaled to the anticipated total, minus anticipated.
  PerDistrict anticipation_error{};
};

struct FeedbackPayload {
  FeedbackStructure structure = FeedbackStructure::bandit;
  bool got_pickup = false;
  Cents reward_delta{};
  std::optional<FullFeedback> full;  // set iff structure == full
};

FeedbackPayload make_feedback(FeedbackStructure structure, const Score& score,
                              const DisplayPayload& display, const LevelOutcome& outcome,
                              const FlowDistribution& anticipated);

struct SystemReplicate {
  FlowDistribution flow;
  PerDistrict pickups{};
  double total_pickups() const { return pickups[0] + pickups[1] + pickups[2]; }
};

struct SystemOutcomeSet {
  std::vector<long> level_counts;
  std::vector<SystemReplicate> replicates;
};

/// Each replicate draws level_counts(split, N) decisions: L0 from the search
/// priors, L1 and L2 resampled from the pools. Pickups are the rounded mean
/// prediction clamped to the flow. Throws Error(staging_violation) when a
/// pool needed by a non-zero level count is empty.
SystemOutcomeSet system_outcome(const DecisionScenario& scenario, const LevelSplit& split,
                                std::span<const District> l1_pool, std::span<const District> l2_pool,
                                const CounterfactualModel& model, int replicates,
                                std::uint64_t seed);

struct TrialRecord {
  std::string agent_id;
  int trial = 0;  // position in the agent's trial order
  int day_index = 0;
  TreatmentCell cell;
  int level = 1;
  bool acts_as_l1 = false;
  Decision decision;
  FeedbackPayload feedback;
  Cents running_reward{};
  long pickups = 0;
  /// Maximizers of the level outcome; best_response is membership.
  std::vector<District> best_set;
  bool best_response = false;
  /// EMD to the level outcome rescaled to the competitor count.
  double anticipation_error = 0.0;
};

}  // namespace cglab
