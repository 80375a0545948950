#pragma once

// On-disk scene stacks and the raw-frame preprocessing applied before
// segmentation: center clipping and missing-pixel filtering.
//
// Stack layout (one directory per location):
//   manifest.json            {location_id, pixel_size_m, width, height, bands,
//                             timestamps, frame_files}
//   <frame_file>             little-endian float32, row-major, band-sequential
//   <frame_file>.mask        width*height bytes, 0 = present, 1 = missing

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shedwatch/date.hpp"

namespace shedwatch {

inline constexpr std::string_view kBandRed = "RED";
inline constexpr std::string_view kBandGreen = "GREEN";
inline constexpr std::string_view kBandBlue = "BLUE";
inline constexpr std::string_view kBandNir = "NIR";
inline constexpr std::string_view kBandProb = "PROB";
inline constexpr std::string_view kBandConf = "CONF";

inline constexpr double kDefaultMaxMissing = 0.15;

struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::string> bands;
    std::vector<float> pixels;       // band-sequential, each band row-major
    std::vector<std::uint8_t> mask;  // 1 = missing
    Date timestamp;

    static Frame blank(int width, int height, std::vector<std::string> bands, Date timestamp);

    std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
    std::optional<std::size_t> band_index(std::string_view name) const;
    // Throws InvalidArgument when the band is absent.
    std::size_t require_band(std::string_view name) const;

    std::span<const float> band(std::size_t b) const {
        return {pixels.data() + b * pixel_count(), pixel_count()};
    }
    std::span<float> band(std::size_t b) { return {pixels.data() + b * pixel_count(), pixel_count()}; }

    bool missing(std::size_t i) const { return mask[i] != 0; }

    // Throws InvalidArgument if any frame invariant is violated.
    void validate() const;

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct SceneSeries {
    std::string location_id;
    std::vector<Frame> frames;
    double pixel_size_m = 3.0;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    std::size_t size() const { return frames.size(); }

    void validate() const;

    friend bool operator==(const SceneSeries&, const SceneSeries&) = default;
};

// Reads a stack directory. Frames are returned sorted by timestamp.
SceneSeries read_scene_stack(const std::filesystem::path& dir);

// Writes manifest.json, frame_NNNN.f32 and frame_NNNN.f32.mask. Creates the
// directory if needed.
void write_scene_stack(const SceneSeries& series, const std::filesystem::path& dir);

// Centered out_width x out_height window. When the margin is odd the extra
// pixel goes to the right/bottom, i.e. the offset is floor(margin / 2).
Frame clip_center(const Frame& frame, int out_width, int out_height);

double missing_fraction(const Frame& frame);

// Keeps frames whose missing fraction is <= max_missing, preserving order.
// Throws InvalidArgument if fewer than two frames survive.
SceneSeries filter_frames(const SceneSeries& series, double max_missing = kDefaultMaxMissing);

}  // namespace shedwatch
