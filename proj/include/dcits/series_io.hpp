#pragma once

#include <filesystem>

#include <json.hpp>

#include "dcits/datagen.hpp"

namespace dcits {

inline constexpr const char* kSeriesSchema = "dcits.series/1";

nlohmann::json spec_to_json(const GeneratorSpec& spec);
GeneratorSpec spec_from_json(const nlohmann::json& j);

// Series and lag indices are exported one-based.
nlohmann::json ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

// One row per series; metadata as leading '#' comment lines.
void write_series_csv(const SeriesMatrix& series, const std::filesystem::path& path);
// Reads values only; spec and truth are left default.
SeriesMatrix read_series_csv(const std::filesystem::path& path);

// JSON sidecar holding the generator spec and ground truth.
void write_series_sidecar(const SeriesMatrix& series, const std::filesystem::path& path);

// Reads a CSV and, when present next to it, its sidecar.
SeriesMatrix load_series(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar_path);

}  // namespace dcits
