#pragma once

#include <string>
#include <vector>

#include "cglab/serialize.hpp"

namespace cglab {

/// Report files written by export_report, relative to the report directory.
inline constexpr const char* kAggregateReport = "aggregate.csv";
inline constexpr const char* kIndividualReport = "individual.csv";
inline constexpr const char* kBestResponseReport = "best_responses.csv";
inline constexpr const char* kFlowDifferenceReport = "flow_differences.csv";
inline constexpr const char* kSystemReport = "system_outcomes.csv";

/// Regenerates every report from the artifacts a manifest lists (config,
/// event logs, system outcomes). Throws Error(staging_violation) unless all
/// stages are complete. Returns the report paths.
std::vector<std::string> export_report(const std::string& manifest_path);

/// Parses an NDJSON event log.
std::vector<Json> read_events(const std::string& path);

/// Minimal CSV reader for the report files (no quoting needed).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace cglab
