#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "etsfs/core/time_series.hpp"
#include "etsfs/ets/spec.hpp"
#include "etsfs/features/features.hpp"

namespace etsfs::cli {

/// One JSONL line: {"id", "period", "values", optional "spec", optional "test"}.
struct SeriesRecord {
    TimeSeries series;
    std::optional<ets::EtsSpec> spec;
    std::vector<double> test;
};

std::string to_jsonl(const SeriesRecord& r);
SeriesRecord parse_series_line(const std::string& line);
/// Blank lines are skipped; a malformed line raises InvalidArgument naming it.
std::vector<SeriesRecord> read_series(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, const std::vector<SeriesRecord>& records);

/// Rectangular CSV: "id" followed by the feature manifest columns.
struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<features::FeatureVector> rows;
};
void write_features(const std::filesystem::path& path, const FeatureTable& table);
/// Throws ManifestMismatch if the header differs from the manifest.
FeatureTable read_features(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::vector<std::byte> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

} // namespace etsfs::cli
