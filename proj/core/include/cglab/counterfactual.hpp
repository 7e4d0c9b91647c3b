#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cglab/pipeline.hpp"
#include "cglab/rng.hpp"
#include "cglab/types.hpp"

namespace cglab {

struct DistrictCoefficients {
  double intercept = 0.0;
  double slope = 1.0;
  double flow_min = 1.0;  // historical bounds of the training flows
  double flow_max = 1.0;
};

/// One externally supplied posterior draw (intercepts/slopes per district).
struct PosteriorDraw {
  PerDistrict intercept{};
  PerDistrict slope{};
  double sigma = 0.0;
};

/// log(pickups) ~ Gaussian(intercept_d + slope_d * log(flow), sigma).
struct CounterfactualModel {
  std::array<DistrictCoefficients, kDistricts> districts{};
  double sigma = 1e-12;
  std::vector<PosteriorDraw> draws;

  /// flow_min >= 1, flow_min <= flow_max, sigma > 0, finite coefficients.
  void validate() const;
};

struct TrainingObservation {
  District district = District::West;
  double flow = 0.0;
  double pickups = 0.0;
};

enum class Shrinkage { none, pooled };

/// Per-district (flow, pickups) pairs from scenarios; districts with flow or
/// pickups below 1 on a day are skipped since they cannot be log-transformed.
std::vector<TrainingObservation> training_data(std::span<const DecisionScenario> scenarios);

/// Least squares on (log flow, log pickups) per district. `pooled` shrinks
/// each district's slope and centered level toward the all-district fit by
/// an empirical-Bayes weight tau^2 / (tau^2 + sampling variance).
/// Throws Error(degenerate_training) on fewer than 3 observations in a
/// district, non-positive values, or constant flows.
CounterfactualModel fit(std::span<const TrainingObservation> data, Shrinkage shrinkage = Shrinkage::none);

enum class DrawMode { mean, posterior_sample };

/// Pickups for one district at `flow`, with the boundary heuristics: flows
/// above flow_max are evaluated at flow_max, and the result is clamped to
/// [0, flow]. Mean mode applies the log-normal mean correction exp(sigma^2/2).
double predict_pickups(const CounterfactualModel& model, District d, double flow);
PerDistrict predict_pickups(const CounterfactualModel& model, const FlowDistribution& flow);
/// posterior_sample draws coefficients from model.draws when present and adds
/// Gaussian log-noise.
PerDistrict predict_pickups(const CounterfactualModel& model, const FlowDistribution& flow,
                            DrawMode mode, Rng& rng);

/// min(1, pickups / flow); an empty district has probability 1.
double pickup_probability(double pickups, double flow);
PerDistrict pickup_probability(const CounterfactualModel& model, const FlowDistribution& flow);
PerDistrict pickup_probability(const CounterfactualModel& model, const FlowDistribution& flow,
                               DrawMode mode, Rng& rng);

struct OutcomeFrame {
  FlowDistribution flow;
  PerDistrict pickups{};
  PerDistrict probability{};
};

struct HypotheticalOutcomeSet {
  std::vector<OutcomeFrame> frames;
};

struct SimulationOptions {
  int frames = 1000;
  /// Use posterior draws / log-noise per frame instead of mean coefficients.
  bool coefficient_uncertainty = false;
};

/// Every frame re-samples each candidate's decision from its search prior.
/// Frame f uses the stream derive_seed(seed, {f}), so frames are independent
/// of evaluation order.
HypotheticalOutcomeSet simulate_hypothetical_outcomes(const DecisionScenario& scenario,
                                                      const CounterfactualModel& model,
                                                      const SimulationOptions& options,
                                                      std::uint64_t seed);

inline constexpr double kFrameIntervalSeconds = 0.2;

struct DisplayPayload {
  DisplayKind kind = DisplayKind::static_point;
  /// Per-district mean flow and mean probability over the frames.
  FlowDistribution mean_flow;
  PerDistrict mean_probability{};
  /// Populated for hops_frames only.
  std::vector<OutcomeFrame> frames;
  double frame_interval = kFrameIntervalSeconds;
};

/// Throws Error(invalid_argument) on an empty set.
DisplayPayload summarize_display(const HypotheticalOutcomeSet& set, DisplayKind kind);

}  // namespace cglab
