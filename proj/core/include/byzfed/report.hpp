#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "byzfed/pipeline.hpp"

namespace byzfed {

/// Version of the results.csv layout (run_id, cell, trial, metric, value).
inline constexpr int kResultsSchemaVersion = 1;

/// Deterministic id of a run: hash of the config snapshot.
std::string run_id_for(const PipelineConfig& cfg);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

std::string results_csv(const PipelineConfig& cfg, const GridResult& grid);
std::string summary_csv(const GridResult& grid);
/// Columns variant, trial, iter, A_s, G_s, G_s_U, Lambda_s.
std::string misclustering_csv(const GridResult& grid);
/// Columns cell, trial, cluster_id, round, update_norm, distance_to_truth.
std::string optimization_csv(const GridResult& grid);

/// Manifest contents: config snapshot, build id, seed, timestamp, files,
/// failures and timings.
nlohmann::json make_manifest(const PipelineConfig& cfg, const GridResult& grid, const std::string& command,
                             const std::vector<std::string>& files);

/// Writes manifest.json first, then the result CSVs, each atomically.
/// Returns the written file names.
std::vector<std::string> write_outputs(const std::filesystem::path& dir, const PipelineConfig& cfg,
                                       const GridResult& grid, const std::string& command);

/// Config embedded in a manifest file.
PipelineConfig config_from_manifest(const std::filesystem::path& manifest_path);

}  // namespace byzfed
