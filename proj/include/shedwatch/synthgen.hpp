#pragma once

// Synthetic scene stacks and probability-map series with known expansion
// ground truth. Sheds are only added, never removed; at most one added shed
// fades in linearly over `transition_frames` starting at `true_t_star`.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shedwatch/date.hpp"
#include "shedwatch/scene_store.hpp"
#include "shedwatch/spectral.hpp"

namespace shedwatch {

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool contains(int px, int py) const {
        return px >= x && px < x + width && py >= y && py < y + height;
    }
    int area() const { return width * height; }
    bool overlaps(const Rect& o) const {
        return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

enum class ProbabilitySource {
    noisy_indicator,  // shed indicator + truncated Gaussian noise
    pseudo_segment,   // stand-in segmenter applied to the rendered scene
};

struct SyntheticSpec {
    std::string location_id = "site_0000";
    int width = 200;
    int height = 200;
    int n_frames = 100;
    double pixel_size_m = 3.0;
    Date start_date{2019, 1, 1};
    std::vector<Rect> base_sheds;
    std::optional<Rect> added_shed;
    int true_t_star = 50;  // 1-based frame at which the added shed starts to appear
    int transition_frames = 3;
    double noise = 0.15;   // sigma of the per-pixel probability noise, truncated at 3 sigma
    double seasonal_amplitude = 0.15;
    double frame_jitter = 0.02;  // per-frame NDVI offset (haze, illumination)
    double missing_rate = 0.01;
    // Transient blobs, part of the probability noise: in a frame, with
    // probability artifact_rate, one rectangle of side 5..artifact_max_size
    // gets artifact_gain * noise higher in probability (and hazier in the
    // scene). Stands in for cloud, snow and segmenter false positives that
    // come and go between frames; vanishes with noise = 0.
    double artifact_rate = 0.15;
    double artifact_gain = 4.0;
    int artifact_max_size = 30;
    double reflectance_noise = 0.0;
    ProbabilitySource probability_source = ProbabilitySource::noisy_indicator;
    double segment_gain = 10.0;
    double segment_center = 0.0;
    std::uint64_t seed = 0;

    double artifact_strength() const;
    void validate() const;
};

struct GroundTruth {
    bool expanded = false;
    std::optional<int> true_t_star;
    std::size_t true_added_pixels = 0;
    double true_added_area_m2 = 0.0;
};

struct SyntheticLocation {
    SceneSeries scene;  // empty when generated without scenes
    ProbMapSeries probs;
    GroundTruth truth;
};

GroundTruth ground_truth(const SyntheticSpec& spec);

// Fully deterministic given spec.seed. Probability maps are identical
// whether or not the scene is rendered (noisy_indicator source only).
SyntheticLocation generate_location(const SyntheticSpec& spec, bool with_scene = true);

// Fraction of the added shed present at 1-based frame t.
double fade_fraction(const SyntheticSpec& spec, int t);

struct BenchmarkConfig {
    int n_static = 200;
    int n_expanded = 50;
    SyntheticSpec template_spec;
    std::uint64_t seed = 42;

    void validate() const;
};

struct BenchmarkEntry {
    SyntheticSpec spec;
    GroundTruth truth;
};

// Per-location specs with randomised shed layout, added-shed size in
// [5x10, 20x40] px (either orientation) and t* uniform in [0.2T, 0.8T].
// Location i uses seed derive_seed(config.seed, i); expanded locations are
// scattered over the id range.
std::vector<BenchmarkEntry> benchmark_entries(const BenchmarkConfig& config);

// Writes <out>/<location_id>/{scene,prob}/, labels.csv and benchmark.json.
std::vector<BenchmarkEntry> generate_benchmark(const BenchmarkConfig& config,
                                               const std::filesystem::path& out,
                                               bool write_scenes = true);

}  // namespace shedwatch
