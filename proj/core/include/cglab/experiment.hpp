#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cglab/agents.hpp"
#include "cglab/config.hpp"
#include "cglab/counterfactual.hpp"
#include "cglab/metrics.hpp"
#include "cglab/outcomes.hpp"
#include "cglab/pipeline.hpp"
#include "cglab/serialize.hpp"
#include "cglab/transport.hpp"

namespace cglab {

enum class Stage { l1, l2, system };
std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

/// Immutable inputs shared by every stage: trial scenarios, the fitted
/// model, one hypothetical-outcome set per trial day, and the ground metric.
struct PreparedExperiment {
  ExperimentConfig config;
  /// Indexed by main trial number (0..15).
  std::vector<DecisionScenario> scenarios;
  CounterfactualModel model;
  std::vector<DisplayPayload> hops;
  std::vector<DisplayPayload> statics;
  GroundMetric metric;
  /// All scenarios the model was fitted on (empty when the model was loaded).
  std::size_t training_days = 0;

  const DisplayPayload& display(int day, DisplayKind kind) const;
  long drivers(int day) const;
  /// N - 1 or N per the config flag.
  long competitors(int day) const;
};

/// Ingests every weekday of a trip corpus; days without retained drivers
/// are skipped with a warning.
std::vector<DecisionScenario> ingest_corpus(std::span<const TripRecord> trips, DecisionMode mode, std::uint64_t seed);

/// The config's synthetic corpus with each trial day's skew calibrated to
/// the per-trial targets. Fills `trial_days` (evenly spaced weekdays after
/// the look-back window) when it is empty.
SyntheticConfig calibrated_synthetic(const ExperimentConfig& config, std::vector<Date>& trial_days);

/// Builds scenarios from the configured source (generating and calibrating
/// a synthetic corpus when asked), fits or loads the model and simulates
/// the displays.
PreparedExperiment prepare(const ExperimentConfig& config);
/// Uses the given scenarios (16, main order) and model directly.
PreparedExperiment prepare(const ExperimentConfig& config, std::vector<DecisionScenario> scenarios,
                           CounterfactualModel model);

/// Frozen decisions of one stage, keyed by (main trial number, cell).
struct ResponsePool {
  int level = 1;
  /// l1_config_hash for L1 pools, config_hash for L2 pools.
  std::uint64_t config_hash = 0;
  std::map<std::pair<int, std::string>, std::vector<District>> decisions;

  std::span<const District> get(int day, const TreatmentCell& cell) const;
  /// FNV-1a of the canonical JSON of `decisions`.
  std::uint64_t content_hash() const;
};

void to_json(Json& j, const ResponsePool& p);
void from_json(const Json& j, ResponsePool& p);

/// Agents of one level for a variant, round-robin over the configured cells.
std::vector<AgentState> make_roster(const ExperimentConfig& config, Variant variant, int level);

struct StageResult {
  std::vector<TrialRecord> records;
  ResponsePool pool;
  std::vector<AgentState> agents;
};

/// The level-specific outcome a decision of `level` is scored against on
/// main trial `day` in `cell`. Level 2 draws from the L1 pool with a seed
/// derived from (config seed, day, cell), so simulated and human sessions
/// see the same outcome.
LevelOutcome stage_outcome(const PreparedExperiment& prep, Variant variant, int level, int day,
                           const TreatmentCell& cell, const ResponsePool* l1_pool);

/// Plays trials 1..15 of the variant's order for every agent of the stage's
/// level. Stage l2 throws Error(staging_violation) without an L1 pool and
/// Error(config_mismatch) when the pool was produced under another L1
/// config hash.
StageResult run_stage(const PreparedExperiment& prep, Variant variant, Stage stage,
                      const ResponsePool* l1_pool = nullptr,
                      std::optional<std::vector<AgentState>> roster = std::nullopt);

struct SystemCell {
  int day = 0;
  int position = 0;
  TreatmentCell cell;
  FlowDistribution displayed;
  SystemOutcomeSet outcomes;
  double max_pickups = 0.0;
  /// The historical bounds could not hold N and were widened to [0, N].
  bool bounds_relaxed = false;
};

struct SystemResult {
  std::vector<SystemCell> cells;  // position-major, cell order of the config
};

/// Throws Error(staging_violation) unless both pools are present.
SystemResult run_system(const PreparedExperiment& prep, Variant variant, const ResponsePool* l1_pool,
                        const ResponsePool* l2_pool);

void to_json(Json& j, const SystemResult& r);
void from_json(const Json& j, SystemResult& r);

/// One NDJSON line per trial record (schema-versioned).
inline constexpr const char* kEventSchema = "cglab.event/1";
inline constexpr const char* kManifestSchema = "cglab.manifest/1";
std::string event_line(const TrialRecord& r, Stage stage, int position, long competitors);

/// On-disk staging under <root>/<variant>/. Each call runs one stage, reads
/// the pools it depends on from disk and rewrites manifest.json.
/// robust_composition's L1 stage adopts <root>/main's L1 pool and events
/// after checking the L1 config hash, and throws Error(staging_violation)
/// when they do not exist.
Json run_stage_on_disk(const PreparedExperiment& prep, Variant variant, Stage stage, const std::string& root);

/// l1 -> l2 -> system -> reports for one variant; returns the manifest.
Json run_replication(const PreparedExperiment& prep, Variant variant, const std::string& root);

std::string variant_dir(const std::string& root, Variant variant);

}  // namespace cglab
