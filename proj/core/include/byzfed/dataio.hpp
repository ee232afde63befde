#pragma once

#include <filesystem>
#include <string>

#include "byzfed/datagen.hpp"
#include "byzfed/types.hpp"

namespace byzfed {

enum class HeaderMode { Auto, Present, Absent };

struct CsvOptions {
  char delimiter = ',';
  HeaderMode header = HeaderMode::Auto;
  int label_column = -1;  ///< column to ignore (labels are not used); -1 = none
};

/// One row per point, plain floats. Throws DataError on ragged rows or
/// unparsable fields.
Matrix read_feature_csv(const std::filesystem::path& path, const CsvOptions& opts = {});

/// SVMlight / LETOR lines ("label qid:Q idx:val ..."); label and qid are
/// ignored, missing features are zero. Dimension is the largest index seen.
Matrix read_svmlight(const std::filesystem::path& path);

/// Writes manifest.json plus one little-endian float64 file per shard
/// (X row-major, then y) into dir.
void save_fleet(const std::filesystem::path& dir, const std::vector<WorkerShard>& shards, const GroundTruth& truth);

struct LoadedFleet {
  std::vector<WorkerShard> shards;
  GroundTruth truth;
};

LoadedFleet load_fleet(const std::filesystem::path& dir);

/// Writes content to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace byzfed
