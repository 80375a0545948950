#pragma once

// Spectral indices and class-probability maps: NDVI, the logistic
// confidence-to-probability map, a threshold-on-NDVI stand-in segmenter,
// k x k smoothing, and shed-pixel counting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shedwatch/date.hpp"
#include "shedwatch/scene_store.hpp"

namespace shedwatch {

// Real-valued per-pixel map with a missing mask (NDVI, confidences).
struct ScalarMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;  // 1 = missing

    std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
};

struct ProbMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;       // row-major, each in [0, 1] where present
    std::vector<std::uint8_t> mask;  // 1 = missing
    Date timestamp;

    static ProbMap filled(int width, int height, float value, Date timestamp);

    std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
    void validate() const;

    friend bool operator==(const ProbMap&, const ProbMap&) = default;
};

struct ProbMapSeries {
    std::string location_id;
    std::vector<ProbMap> maps;
    double pixel_size_m = 3.0;

    int width() const { return maps.empty() ? 0 : maps.front().width; }
    int height() const { return maps.empty() ? 0 : maps.front().height; }
    std::size_t size() const { return maps.size(); }

    void validate() const;

    friend bool operator==(const ProbMapSeries&, const ProbMapSeries&) = default;
};

inline constexpr double kDefaultSegmentGain = 10.0;
inline constexpr double kDefaultSegmentCenter = 0.0;
inline constexpr int kDefaultSmoothKernel = 3;
inline constexpr double kDefaultPixelThreshold = 0.5;

// (NIR - RED) / (NIR + RED); masked where the input is masked or the
// denominator is zero.
ScalarMap ndvi(const Frame& frame);

// Mean NDVI over defined pixels. Throws InvalidArgument if none is defined.
double mean_ndvi(const Frame& frame);

// Logistic map 1 / (1 + exp(-c)); masks pass through.
ProbMap confidences_to_probs(const ScalarMap& conf, Date timestamp);

// Confidence raster carried as the CONF band of a frame.
ScalarMap confidence_map(const Frame& frame);

// Stand-in segmenter: p = 1 / (1 + exp(-gain * (center - NDVI))). Low-NDVI
// roofs map to high probability. Pixels with undefined NDVI are masked.
ProbMap pseudo_segment(const Frame& frame, double gain = kDefaultSegmentGain,
                       double center = kDefaultSegmentCenter);

// Mean over the unmasked in-bounds pixels of the k x k window centred on each
// pixel. A pixel stays masked only when its whole window is masked.
ProbMap smooth(const ProbMap& pm, int k = kDefaultSmoothKernel);

// Unmasked pixels with value >= threshold.
std::size_t cafo_pixel_count(const ProbMap& pm, double threshold = kDefaultPixelThreshold);

// Probability stacks share the scene-stack layout with bands = ["PROB"].
SceneSeries to_scene_series(const ProbMapSeries& series);
ProbMapSeries to_prob_series(const SceneSeries& series);
ProbMapSeries read_prob_stack(const std::filesystem::path& dir);
void write_prob_stack(const ProbMapSeries& series, const std::filesystem::path& dir);

}  // namespace shedwatch
