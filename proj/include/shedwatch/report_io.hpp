#pragma once

// Serialised outputs: the JSON-lines report stream shared by the detector and
// the baselines, the ranking CSV, footprint run-length encoding and the
// labels CSV consumed by evaluation.
//
// Every report line carries "method", "location_id" and "score" (the
// test statistic for MLE, the confidence for baselines).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shedwatch/baselines.hpp"
#include "shedwatch/detector.hpp"

namespace shedwatch {

// Row-major runs as [value, run_length, value, run_length, ...].
std::vector<std::int64_t> rle_encode(const BinaryMap& map);
BinaryMap rle_decode(int width, int height, std::span<const std::int64_t> runs);

std::string detection_to_json(const DetectionReport& report);
DetectionReport detection_from_json(std::string_view line);

std::string baseline_to_json(const BaselineResult& result);
BaselineResult baseline_from_json(std::string_view line);

struct ReportRecord {
    std::string method;
    std::string location_id;
    double score = 0.0;
    std::optional<double> area_m2;
    std::string line;  // the original JSON text
};

ReportRecord parse_report_line(std::string_view line);

// Blank lines are skipped; malformed lines raise IoError naming the line.
std::vector<ReportRecord> read_report_stream(const std::filesystem::path& path);
void write_report_stream(const std::filesystem::path& path, std::span<const std::string> lines);

// Rewrites `path` with `lines` plus every existing record whose
// (method, location_id) is not among them, sorted by (method, location_id).
// A missing file is treated as empty.
void merge_report_stream(const std::filesystem::path& path, std::span<const std::string> lines);

std::vector<DetectionReport> read_detection_reports(const std::filesystem::path& path);

// location_id,test_statistic,expansion_area_m2,null_percentile in ranking order.
void write_ranking_csv(const std::filesystem::path& path, std::span<const DetectionReport> ranked);

struct LabelRow {
    std::string location_id;
    bool expanded = false;
    std::optional<int> true_t_star;
    std::optional<double> true_area_m2;
};

// Header "location_id,expanded[,true_t_star][,true_area_m2]" (column order
// free); throws IoError when unreadable or malformed.
std::vector<LabelRow> read_labels(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace shedwatch
