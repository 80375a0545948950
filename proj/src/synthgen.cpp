#include "shedwatch/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "shedwatch/errors.hpp"
#include "shedwatch/random.hpp"

namespace shedwatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Reflectance {
    float red;
    float green;
    float blue;
    float nir;
};

constexpr Reflectance kShed{0.30f, 0.28f, 0.26f, 0.20f};
constexpr float kHaze = 0.45f;
constexpr double kBackgroundNdvi = 0.55;
constexpr double kBackgroundRed = 0.06;

Reflectance background(double ndvi) {
    const double nir = kBackgroundRed * (1.0 + ndvi) / (1.0 - ndvi);
    return {float(kBackgroundRed), 0.09f, 0.05f, float(nir)};
}

Reflectance lerp(const Reflectance& a, const Reflectance& b, double w) {
    auto mix = [w](float x, float y) { return float(x + (y - x) * w); };
    return {mix(a.red, b.red), mix(a.green, b.green), mix(a.blue, b.blue), mix(a.nir, b.nir)};
}

// Irregular, summer-heavy acquisition dates: n distinct days drawn without
// replacement with weights peaking mid-year (weighted reservoir keys).
std::vector<Date> acquisition_dates(const SyntheticSpec& spec, Rng& rng) {
    const int span = std::max(365, 2 * spec.n_frames);
    std::vector<std::pair<double, int>> keys;
    keys.reserve(std::size_t(span));
    for (int d = 0; d < span; ++d) {
        const int doy = (spec.start_date + d).day_of_year();
        const double w = 1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * (doy - 80) / 365.25);
        const double u = std::max(rng.uniform(), 1e-300);
        keys.emplace_back(std::log(u) / w, d);
    }
    std::partial_sort(keys.begin(), keys.begin() + spec.n_frames, keys.end(),
                      [](const auto& a, const auto& b) {
                          return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    std::vector<int> days;
    for (int i = 0; i < spec.n_frames; ++i) {
        days.push_back(keys[std::size_t(i)].second);
    }
    std::sort(days.begin(), days.end());
    std::vector<Date> dates;
    for (int d : days) {
        dates.push_back(spec.start_date + d);
    }
    return dates;
}

bool in_any(const std::vector<Rect>& rects, int x, int y) {
    return std::any_of(rects.begin(), rects.end(),
                       [x, y](const Rect& r) { return r.contains(x, y); });
}

void check_rect(const Rect& r, const SyntheticSpec& spec) {
    if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > spec.width ||
        r.y + r.height > spec.height) {
        throw InvalidArgument("shed rectangle outside the raster");
    }
}

json rect_json(const Rect& r) {
    return json{{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}};
}

json spec_json(const SyntheticSpec& s) {
    json j;
    j["location_id"] = s.location_id;
    j["width"] = s.width;
    j["height"] = s.height;
    j["n_frames"] = s.n_frames;
    j["pixel_size_m"] = s.pixel_size_m;
    j["start_date"] = s.start_date.iso();
    j["base_sheds"] = json::array();
    for (const Rect& r : s.base_sheds) {
        j["base_sheds"].push_back(rect_json(r));
    }
    j["added_shed"] = s.added_shed ? rect_json(*s.added_shed) : json(nullptr);
    j["true_t_star"] = s.true_t_star;
    j["transition_frames"] = s.transition_frames;
    j["noise"] = s.noise;
    j["seasonal_amplitude"] = s.seasonal_amplitude;
    j["frame_jitter"] = s.frame_jitter;
    j["missing_rate"] = s.missing_rate;
    j["artifact_rate"] = s.artifact_rate;
    j["artifact_gain"] = s.artifact_gain;
    j["artifact_max_size"] = s.artifact_max_size;
    j["reflectance_noise"] = s.reflectance_noise;
    j["probability_source"] =
        s.probability_source == ProbabilitySource::noisy_indicator ? "noisy_indicator"
                                                                    : "pseudo_segment";
    j["segment_gain"] = s.segment_gain;
    j["segment_center"] = s.segment_center;
    j["seed"] = s.seed;
    return j;
}

}  // namespace

double SyntheticSpec::artifact_strength() const {
    return std::min(1.0, artifact_gain * noise);
}

void SyntheticSpec::validate() const {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("synthetic raster dimensions must be positive");
    }
    if (n_frames < 2) {
        throw InvalidArgument("synthetic series needs at least 2 frames");
    }
    if (!(pixel_size_m > 0.0)) {
        throw InvalidArgument("pixel_size_m must be positive");
    }
    for (const Rect& r : base_sheds) {
        check_rect(r, *this);
    }
    if (added_shed) {
        check_rect(*added_shed, *this);
        if (!(true_t_star > 1 && true_t_star < n_frames)) {
            throw InvalidArgument("true_t_star must satisfy 1 < t* < n_frames");
        }
    }
    if (transition_frames < 1) {
        throw InvalidArgument("transition_frames must be at least 1");
    }
    if (!(noise >= 0.0 && noise < 0.5)) {
        throw InvalidArgument("noise sigma must lie in [0, 0.5)");
    }
    if (!(missing_rate >= 0.0 && missing_rate <= 1.0) ||
        !(artifact_rate >= 0.0 && artifact_rate <= 1.0)) {
        throw InvalidArgument("rates must lie in [0, 1]");
    }
    if (!(artifact_gain >= 0.0) || artifact_max_size < 5) {
        throw InvalidArgument("artifact gain must be non-negative, max size >= 5");
    }
    if (!(seasonal_amplitude >= 0.0 && seasonal_amplitude < 0.4) || !(frame_jitter >= 0.0) ||
        !(reflectance_noise >= 0.0)) {
        throw InvalidArgument("invalid scene parameters");
    }
    if (!(segment_gain > 0.0)) {
        throw InvalidArgument("segment gain must be positive");
    }
}

GroundTruth ground_truth(const SyntheticSpec& spec) {
    GroundTruth truth;
    if (spec.added_shed) {
        const Rect& a = *spec.added_shed;
        for (int y = a.y; y < a.y + a.height; ++y) {
            for (int x = a.x; x < a.x + a.width; ++x) {
                if (!in_any(spec.base_sheds, x, y)) {
                    ++truth.true_added_pixels;
                }
            }
        }
    }
    truth.expanded = truth.true_added_pixels > 0;
    if (truth.expanded) {
        truth.true_t_star = spec.true_t_star;
    }
    truth.true_added_area_m2 =
        double(truth.true_added_pixels) * spec.pixel_size_m * spec.pixel_size_m;
    return truth;
}

double fade_fraction(const SyntheticSpec& spec, int t) {
    if (!spec.added_shed) {
        return 0.0;
    }
    return std::clamp(double(t - spec.true_t_star + 1) / double(spec.transition_frames), 0.0, 1.0);
}

SyntheticLocation generate_location(const SyntheticSpec& spec, bool with_scene) {
    spec.validate();
    if (spec.probability_source == ProbabilitySource::pseudo_segment) {
        with_scene = true;
    }
    const int w = spec.width;
    const int h = spec.height;
    const std::size_t npix = std::size_t(w) * std::size_t(h);

    Rng date_rng(derive_seed(spec.seed, 0));
    Rng frame_rng(derive_seed(spec.seed, 1));
    Rng noise_rng(derive_seed(spec.seed, 2));
    Rng scene_rng(derive_seed(spec.seed, 3));

    // 0 = background, 1 = base shed, 2 = added shed
    std::vector<std::uint8_t> label(npix, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (in_any(spec.base_sheds, x, y)) {
                label[std::size_t(y) * w + x] = 1;
            } else if (spec.added_shed && spec.added_shed->contains(x, y)) {
                label[std::size_t(y) * w + x] = 2;
            }
        }
    }

    const std::vector<Date> dates = acquisition_dates(spec, date_rng);

    SyntheticLocation out;
    out.truth = ground_truth(spec);
    out.probs.location_id = spec.location_id;
    out.probs.pixel_size_m = spec.pixel_size_m;
    if (with_scene) {
        out.scene.location_id = spec.location_id;
        out.scene.pixel_size_m = spec.pixel_size_m;
    }
    const std::vector<std::string> bands = {std::string(kBandRed), std::string(kBandGreen),
                                            std::string(kBandBlue), std::string(kBandNir)};
    const double noise_cap = 3.0 * spec.noise;

    for (int k = 0; k < spec.n_frames; ++k) {
        const int t = k + 1;
        const Date date = dates[std::size_t(k)];
        const double fade = fade_fraction(spec, t);
        const double season =
            std::sin(2.0 * std::numbers::pi * (date.day_of_year() - 105) / 365.25);
        const double ndvi_bg = std::clamp(
            kBackgroundNdvi + spec.seasonal_amplitude * season + spec.frame_jitter * frame_rng.normal(),
            0.05, 0.95);

        std::optional<Rect> artifact;
        if (frame_rng.bernoulli(spec.artifact_rate)) {
            Rect r;
            r.width = int(std::min<std::int64_t>(w, frame_rng.uniform_int(5, spec.artifact_max_size)));
            r.height = int(std::min<std::int64_t>(h, frame_rng.uniform_int(5, spec.artifact_max_size)));
            r.x = int(frame_rng.uniform_int(0, w - r.width));
            r.y = int(frame_rng.uniform_int(0, h - r.height));
            artifact = r;
        }

        std::vector<std::uint8_t> mask(npix, 0);
        if (spec.missing_rate > 0.0) {
            for (auto& m : mask) {
                m = noise_rng.bernoulli(spec.missing_rate) ? 1 : 0;
            }
        }

        if (with_scene) {
            Frame f = Frame::blank(w, h, bands, date);
            const Reflectance bg = background(ndvi_bg);
            const Reflectance added = lerp(bg, kShed, fade);
            auto red = f.band(0);
            auto green = f.band(1);
            auto blue = f.band(2);
            auto nir = f.band(3);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = std::size_t(y) * w + x;
                    Reflectance px = label[i] == 1 ? kShed : (label[i] == 2 ? added : bg);
                    if (artifact && artifact->contains(x, y)) {
                        px = lerp(px, {kHaze, kHaze, kHaze, kHaze}, spec.artifact_strength());
                    }
                    if (spec.reflectance_noise > 0.0) {
                        px.red = std::max(0.0f, float(px.red + spec.reflectance_noise * scene_rng.normal()));
                        px.green = std::max(0.0f, float(px.green + spec.reflectance_noise * scene_rng.normal()));
                        px.blue = std::max(0.0f, float(px.blue + spec.reflectance_noise * scene_rng.normal()));
                        px.nir = std::max(0.0f, float(px.nir + spec.reflectance_noise * scene_rng.normal()));
                    }
                    if (mask[i] != 0) {
                        px = {0.0f, 0.0f, 0.0f, 0.0f};
                    }
                    red[i] = px.red;
                    green[i] = px.green;
                    blue[i] = px.blue;
                    nir[i] = px.nir;
                }
            }
            f.mask = mask;
            out.scene.frames.push_back(std::move(f));
        }

        if (spec.probability_source == ProbabilitySource::pseudo_segment) {
            out.probs.maps.push_back(
                pseudo_segment(out.scene.frames.back(), spec.segment_gain, spec.segment_center));
            continue;
        }

        ProbMap pm = ProbMap::filled(w, h, 0.0f, date);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = std::size_t(y) * w + x;
                double p = label[i] == 1 ? 1.0 : (label[i] == 2 ? fade : 0.0);
                if (artifact && artifact->contains(x, y)) {
                    p += spec.artifact_strength();
                }
                if (spec.noise > 0.0) {
                    double n = noise_rng.normal(0.0, spec.noise);
                    while (std::abs(n) > noise_cap) {
                        n = noise_rng.normal(0.0, spec.noise);
                    }
                    p += n;
                }
                if (mask[i] != 0) {
                    pm.mask[i] = 1;
                    continue;
                }
                pm.values[i] = float(std::clamp(p, 0.0, 1.0));
            }
        }
        out.probs.maps.push_back(std::move(pm));
    }
    return out;
}

void BenchmarkConfig::validate() const {
    if (n_static < 0 || n_expanded < 0 || n_static + n_expanded == 0) {
        throw InvalidArgument("benchmark needs at least one location");
    }
    template_spec.validate();
    if (n_expanded > 0 && (template_spec.width < 30 || template_spec.height < 50)) {
        throw InvalidArgument("expanded locations need rasters of at least 30 x 50 px");
    }
}

std::vector<BenchmarkEntry> benchmark_entries(const BenchmarkConfig& config) {
    config.validate();
    const int total = config.n_static + config.n_expanded;

    // Which ids carry an expansion: seeded shuffle so that id order leaks
    // nothing about labels.
    std::vector<std::uint8_t> expanded(std::size_t(total), 0);
    std::fill(expanded.begin(), expanded.begin() + config.n_expanded, 1);
    Rng order_rng(splitmix64(config.seed ^ 0x5eedULL));
    for (int i = total - 1; i > 0; --i) {
        const auto j = std::size_t(order_rng.uniform_int(0, i));
        std::swap(expanded[std::size_t(i)], expanded[j]);
    }

    std::vector<BenchmarkEntry> entries;
    entries.reserve(std::size_t(total));
    const SyntheticSpec& tmpl = config.template_spec;
    const int w = tmpl.width;
    const int h = tmpl.height;
    for (int i = 0; i < total; ++i) {
        SyntheticSpec spec = tmpl;
        spec.seed = derive_seed(config.seed, std::uint64_t(i));
        char id[32];
        std::snprintf(id, sizeof id, "site_%04d", i);
        spec.location_id = id;
        Rng layout(splitmix64(spec.seed));

        // One to three barns side by side around the centre.
        spec.base_sheds.clear();
        const int n_barns = int(layout.uniform_int(1, 3));
        const int barn_w = int(std::max<std::int64_t>(3, layout.uniform_int(w / 20, w / 8)));
        const int barn_h = int(std::max<std::int64_t>(3, layout.uniform_int(h / 8, h / 4)));
        const int gap = int(layout.uniform_int(2, 6));
        const int block_w = n_barns * barn_w + (n_barns - 1) * gap;
        const int x0 = std::clamp(w / 2 - block_w / 2 + int(layout.uniform_int(-w / 10, w / 10)), 0,
                                  std::max(0, w - block_w));
        const int y0 = std::clamp(h / 2 - barn_h / 2 + int(layout.uniform_int(-h / 10, h / 10)), 0,
                                  std::max(0, h - barn_h));
        for (int b = 0; b < n_barns; ++b) {
            Rect r{x0 + b * (barn_w + gap), y0, barn_w, barn_h};
            r.width = std::min(r.width, w - r.x);
            r.height = std::min(r.height, h - r.y);
            if (r.width > 0 && r.height > 0) {
                spec.base_sheds.push_back(r);
            }
        }

        spec.added_shed.reset();
        if (expanded[std::size_t(i)] != 0) {
            int aw = int(layout.uniform_int(5, 20));
            int ah = int(layout.uniform_int(10, 40));
            if (layout.bernoulli(0.5)) {
                std::swap(aw, ah);
            }
            aw = std::min(aw, w);
            ah = std::min(ah, h);
            // Place next to the existing barns, retrying until it is inside
            // the raster and clear of them.
            std::optional<Rect> placed;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                const Rect& anchor =
                    spec.base_sheds[std::size_t(layout.uniform_int(0, int(spec.base_sheds.size()) - 1))];
                const int side = int(layout.uniform_int(0, 3));
                const int offset = int(layout.uniform_int(2, 8));
                Rect r{0, 0, aw, ah};
                switch (side) {
                    case 0: r.x = anchor.x + anchor.width + offset; r.y = anchor.y; break;
                    case 1: r.x = anchor.x - offset - aw; r.y = anchor.y; break;
                    case 2: r.x = anchor.x; r.y = anchor.y + anchor.height + offset; break;
                    default: r.x = anchor.x; r.y = anchor.y - offset - ah; break;
                }
                const bool inside = r.x >= 0 && r.y >= 0 && r.x + aw <= w && r.y + ah <= h;
                const bool clear = std::none_of(spec.base_sheds.begin(), spec.base_sheds.end(),
                                                [&r](const Rect& b) { return b.overlaps(r); });
                if (inside && clear) {
                    placed = r;
                }
            }
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                Rect r{int(layout.uniform_int(0, w - aw)), int(layout.uniform_int(0, h - ah)), aw, ah};
                if (std::none_of(spec.base_sheds.begin(), spec.base_sheds.end(),
                                 [&r](const Rect& b) { return b.overlaps(r); })) {
                    placed = r;
                }
            }
            if (!placed) {
                throw InvalidArgument("cannot place an added shed; raster too small");
            }
            spec.added_shed = placed;
            const int lo = std::max(2, int(std::lround(0.2 * spec.n_frames)));
            const int hi = std::min(spec.n_frames - 1, int(std::lround(0.8 * spec.n_frames)));
            spec.true_t_star = int(layout.uniform_int(lo, std::max(lo, hi)));
        }
        entries.push_back({spec, ground_truth(spec)});
    }
    return entries;
}

std::vector<BenchmarkEntry> generate_benchmark(const BenchmarkConfig& config, const fs::path& out,
                                               bool write_scenes) {
    std::vector<BenchmarkEntry> entries = benchmark_entries(config);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw IoError("cannot create " + out.string() + ": " + ec.message());
    }

    std::ofstream labels(out / "labels.csv", std::ios::trunc);
    if (!labels) {
        throw IoError("cannot write labels.csv in " + out.string());
    }
    labels << "location_id,expanded,true_t_star,true_area_m2\n";

    json manifest;
    manifest["master_seed"] = config.seed;
    manifest["n_static"] = config.n_static;
    manifest["n_expanded"] = config.n_expanded;
    manifest["seed_rule"] = "derive_seed(master, i) = splitmix64(master ^ splitmix64(i))";
    manifest["template"] = spec_json(config.template_spec);
    manifest["locations"] = json::array();

    for (const BenchmarkEntry& e : entries) {
        const SyntheticLocation loc = generate_location(e.spec, write_scenes);
        const fs::path dir = out / e.spec.location_id;
        if (write_scenes) {
            write_scene_stack(loc.scene, dir / "scene");
        }
        write_prob_stack(loc.probs, dir / "prob");

        labels << e.spec.location_id << ',' << (e.truth.expanded ? 1 : 0) << ',';
        if (e.truth.true_t_star) {
            labels << *e.truth.true_t_star;
        }
        labels << ',' << e.truth.true_added_area_m2 << '\n';
        manifest["locations"].push_back(spec_json(e.spec));
    }
    if (!labels) {
        throw IoError("write failed on labels.csv");
    }

    std::ofstream bench(out / "benchmark.json", std::ios::trunc);
    if (!bench) {
        throw IoError("cannot write benchmark.json in " + out.string());
    }
    bench << manifest.dump(2) << '\n';
    return entries;
}

}  // namespace shedwatch
