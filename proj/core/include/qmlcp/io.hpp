#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmlcp/estimate.hpp"
#include "qmlcp/simulate.hpp"

namespace qmlcp {

inline constexpr const char* kSeriesSchema = "qmlcp.series/1";
inline constexpr const char* kSegmentationSchema = "qmlcp.segmentation/1";

// Single-column CSV, one value per line, optional header row "x". Values are
// written with 17 significant digits so they read back bit-identically.
void write_series_csv(const std::filesystem::path& path, const std::vector<double>& x);
std::vector<double> read_series_csv(const std::filesystem::path& path);
std::vector<double> parse_series_csv(const std::string& text);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

// Sidecar written next to a simulated path: the BreakModel plus generation
// metadata and t*.
nlohmann::json series_sidecar(const BreakModel& model, const SeriesSample& sample);
BreakModel break_model_from_json(const nlohmann::json& j);

nlohmann::json segmentation_to_json(const SegmentationResult& result);
SegmentationResult segmentation_from_json(const nlohmann::json& j);

}  // namespace qmlcp
