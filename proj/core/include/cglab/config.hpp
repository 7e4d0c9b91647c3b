#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cglab/agents.hpp"
#include "cglab/counterfactual.hpp"
#include "cglab/levels.hpp"
#include "cglab/pipeline.hpp"
#include "cglab/serialize.hpp"
#include "cglab/synthetic.hpp"
#include "cglab/welfare.hpp"

namespace cglab {

inline constexpr int kTrialDays = 16;  // position 0 is the practice trial

/// Robust-order position of each main trial.
inline constexpr std::array<int, kTrialDays> kRobustTrialOrder = {0, 6, 14, 10, 7, 12, 15, 1,
                                                                 9, 4, 3, 8, 5, 13, 2, 11};

enum class Variant { main, robust_trial_order, robust_composition };
std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

/// The per-trial targets of the published scenario structure: L1 West except
/// trials 4 and 9 (North), L2 East throughout.
std::vector<District> default_l1_targets();
std::vector<District> default_l2_targets();

struct ScenarioSource {
  enum class Kind { synthetic, scenarios_file, trips_file };
  Kind kind = Kind::synthetic;
  /// Scenario JSON or trip CSV, resolved against the config file's directory.
  std::string path;
  DecisionMode decision_mode = DecisionMode::argmax;

  SyntheticConfig synthetic;
  /// Calibrate the trial days' skews so the L1 and L2 best responses follow
  /// these per-trial targets (indexed by main trial number).
  bool calibrate = true;
  std::vector<District> l1_targets = default_l1_targets();
  std::vector<District> l2_targets = default_l2_targets();
  double calibration_min_share = 0.12;
};

struct LevelConfig {
  double lambda = 1.5;
  /// Explicit split overriding the Poisson(lambda) one.
  std::vector<double> proportions;
  /// Explicit L2 belief over (L0, L1) overriding the endowed mixture.
  std::vector<double> l2_belief;
  RoundingMode rounding = RoundingMode::exact_paper;

  LevelSplit split() const;
  MixtureBelief belief(int level) const;
};

struct RosterSize {
  int l1_per_cell = 0;
  int l2_per_cell = 0;
};

struct AgentConfig {
  double temperature = 0.2;
  double learning_rate_bandit = 0.1;
  double learning_rate_full = 0.3;
  /// HOPs perception; 0 would be invalid, values above the frame count read every frame.
  int frames_observed = 10;
  double endowment_failure = 0.16;
  L1Prediction l1_prediction = L1Prediction::display_argmax;
  double l1_prediction_temperature = 0.1;
};

struct SimulationConfig {
  int frames = 1000;
  int outcome_replicates = 1000;
  int system_replicates = 500;
  bool coefficient_uncertainty = false;
  ScoringMode scoring = ScoringMode::bernoulli;
  /// Participants anticipate N - 1 others when true, N otherwise.
  bool competitors_exclude_self = true;
};

struct ModelConfig {
  Shrinkage shrinkage = Shrinkage::pooled;
  /// Pre-fitted model JSON; fitted from the scenario corpus when empty.
  std::string path;
};

enum class MetricPreset { centroids, collinear };

struct ExperimentConfig {
  ScenarioSource source;
  /// Trial days as dates (main trial order). Empty with a synthetic source
  /// selects evenly spaced generated weekdays.
  std::vector<Date> days;
  LevelConfig levels;
  LevelConfig robust_composition_levels{3.0, {0.15, 0.35, 0.50}, {0.2, 0.8}, RoundingMode::largest_remainder};
  std::array<int, kTrialDays> robust_order = kRobustTrialOrder;
  std::vector<TreatmentCell> cells{kTreatmentCells.begin(), kTreatmentCells.end()};
  RosterSize main_roster{120, 90};
  RosterSize robust_order_roster{60, 45};
  RosterSize robust_composition_roster{0, 75};
  double roster_scale = 1.0;
  AgentConfig agents;
  SimulationConfig simulation;
  ModelConfig model;
  MetricPreset metric = MetricPreset::centroids;
  AugmentedLagrangianOptions welfare;
  std::uint64_t seed = 20240601;

  /// Directory used to resolve relative paths.
  std::string base_dir;

  /// Throws Error(invalid_argument) on an inconsistent config.
  void validate() const;
  RosterSize roster(Variant v) const;
  const LevelConfig& level_config(Variant v) const;
  /// Trial position -> main trial number (day index) for the variant.
  std::array<int, kTrialDays> trial_sequence(Variant v) const;
};

void to_json(Json& j, const ExperimentConfig& c);
/// Missing fields take their defaults; unknown enum names throw.
void from_json(const Json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::string& path);

/// FNV-1a of the canonical (sorted-key) dump of the normalized config with
/// the variant's effective levels, roster and order.
std::uint64_t config_hash(const ExperimentConfig& c, Variant v);
/// Hash over only what determines L1 play; equal for main and
/// robust_composition, which is what lets the latter reuse the main pool.
std::uint64_t l1_config_hash(const ExperimentConfig& c, Variant v);

std::string hex64(std::uint64_t v);

}  // namespace cglab
