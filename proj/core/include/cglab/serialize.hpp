#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cglab/agents.hpp"
#include "cglab/counterfactual.hpp"
#include "cglab/outcomes.hpp"
#include "cglab/pipeline.hpp"
#include "cglab/types.hpp"

namespace cglab {

using Json = nlohmann::json;

inline constexpr const char* kScenarioSchema = "cglab.scenarios/1";
inline constexpr const char* kModelSchema = "cglab.model/1";
inline constexpr const char* kDisplaySchema = "cglab.display/1";
inline constexpr const char* kFeedbackSchema = "cglab.feedback/1";

/// Per-district values as {"West": w, "North": n, "East": e}.
Json per_district_json(const PerDistrict& v);
PerDistrict per_district_from_json(const Json& j);

void to_json(Json& j, const FlowDistribution& f);
void from_json(const Json& j, FlowDistribution& f);

void to_json(Json& j, const DecisionScenario& s);
void from_json(const Json& j, DecisionScenario& s);

/// {"schema": ..., "scenarios": [...]}
Json scenarios_json(const std::vector<DecisionScenario>& scenarios);
std::vector<DecisionScenario> scenarios_from_json(const Json& j);

void to_json(Json& j, const CounterfactualModel& m);
/// Validates the result; throws Error(invalid_argument) on a bad document.
void from_json(const Json& j, CounterfactualModel& m);

/// Wire format: static payloads carry "static" (mean flow and probability)
/// and no frames; hops payloads carry "frames" and "frame_interval" only.
void to_json(Json& j, const DisplayPayload& p);
/// Hops payloads recompute the mean from their frames.
void from_json(const Json& j, DisplayPayload& p);

void to_json(Json& j, const LevelOutcome& o);
void from_json(const Json& j, LevelOutcome& o);

/// Bandit payloads carry exactly structure, got_pickup and reward_delta.
void to_json(Json& j, const FeedbackPayload& p);
void from_json(const Json& j, FeedbackPayload& p);

void to_json(Json& j, const Decision& d);

/// Reads and parses a JSON file; throws Error(io) on failure.
Json read_json_file(const std::string& path);
/// Writes `j.dump(2)` plus a newline.
void write_json_file(const std::string& path, const Json& j);

}  // namespace cglab
