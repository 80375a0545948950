#include "shedwatch/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "shedwatch/errors.hpp"

namespace shedwatch {

ProbMap ProbMap::filled(int width, int height, float value, Date timestamp) {
    ProbMap pm;
    pm.width = width;
    pm.height = height;
    pm.values.assign(pm.pixel_count(), value);
    pm.mask.assign(pm.pixel_count(), 0);
    pm.timestamp = timestamp;
    return pm;
}

void ProbMap::validate() const {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("probability map dimensions must be positive");
    }
    if (values.size() != pixel_count() || mask.size() != pixel_count()) {
        throw InvalidArgument("probability map buffers do not match its dimensions");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask[i] == 0 && !(values[i] >= 0.0f && values[i] <= 1.0f)) {
            throw InvalidArgument("probability outside [0, 1]");
        }
    }
}

void ProbMapSeries::validate() const {
    if (maps.size() < 2) {
        throw InvalidArgument("probability series needs at least 2 maps");
    }
    if (!(pixel_size_m > 0.0)) {
        throw InvalidArgument("pixel_size_m must be positive");
    }
    for (std::size_t t = 0; t < maps.size(); ++t) {
        maps[t].validate();
        if (maps[t].width != maps[0].width || maps[t].height != maps[0].height) {
            throw InvalidArgument("probability maps differ in dimensions");
        }
        if (t > 0 && !(maps[t - 1].timestamp < maps[t].timestamp)) {
            throw InvalidArgument("probability map timestamps must strictly increase");
        }
    }
}

ScalarMap ndvi(const Frame& frame) {
    const auto red = frame.band(frame.require_band(kBandRed));
    const auto nir = frame.band(frame.require_band(kBandNir));
    ScalarMap out;
    out.width = frame.width;
    out.height = frame.height;
    out.values.assign(frame.pixel_count(), 0.0);
    out.mask.assign(frame.pixel_count(), 0);
    for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
        const double r = red[i];
        const double n = nir[i];
        const double denom = n + r;
        if (frame.missing(i) || denom == 0.0) {
            out.mask[i] = 1;
            continue;
        }
        out.values[i] = (n - r) / denom;
    }
    return out;
}

double mean_ndvi(const Frame& frame) {
    const ScalarMap index = ndvi(frame);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < index.pixel_count(); ++i) {
        if (index.mask[i] == 0) {
            sum += index.values[i];
            ++count;
        }
    }
    if (count == 0) {
        throw InvalidArgument("mean NDVI undefined: every pixel is masked");
    }
    return sum / double(count);
}

ProbMap confidences_to_probs(const ScalarMap& conf, Date timestamp) {
    ProbMap out = ProbMap::filled(conf.width, conf.height, 0.0f, timestamp);
    for (std::size_t i = 0; i < conf.pixel_count(); ++i) {
        out.mask[i] = conf.mask[i];
        if (conf.mask[i] != 0) {
            continue;
        }
        if (!std::isfinite(conf.values[i])) {
            throw InvalidArgument("non-finite segmenter confidence");
        }
        out.values[i] = float(1.0 / (1.0 + std::exp(-conf.values[i])));
    }
    return out;
}

ScalarMap confidence_map(const Frame& frame) {
    const auto conf = frame.band(frame.require_band(kBandConf));
    ScalarMap out;
    out.width = frame.width;
    out.height = frame.height;
    out.values.assign(conf.begin(), conf.end());
    out.mask = frame.mask;
    return out;
}

ProbMap pseudo_segment(const Frame& frame, double gain, double center) {
    if (!(gain > 0.0)) {
        throw InvalidArgument("segmenter gain must be positive");
    }
    const ScalarMap index = ndvi(frame);
    ProbMap out = ProbMap::filled(frame.width, frame.height, 0.0f, frame.timestamp);
    for (std::size_t i = 0; i < index.pixel_count(); ++i) {
        out.mask[i] = index.mask[i];
        if (index.mask[i] == 0) {
            out.values[i] = float(1.0 / (1.0 + std::exp(-gain * (center - index.values[i]))));
        }
    }
    return out;
}

ProbMap smooth(const ProbMap& pm, int k) {
    if (k < 1 || k % 2 == 0) {
        throw InvalidArgument("smoothing kernel must be odd and positive");
    }
    if (k == 1) {
        return pm;
    }
    const int r = k / 2;
    ProbMap out = pm;
    for (int y = 0; y < pm.height; ++y) {
        const int y_lo = std::max(0, y - r);
        const int y_hi = std::min(pm.height - 1, y + r);
        for (int x = 0; x < pm.width; ++x) {
            const int x_lo = std::max(0, x - r);
            const int x_hi = std::min(pm.width - 1, x + r);
            double sum = 0.0;
            int count = 0;
            for (int yy = y_lo; yy <= y_hi; ++yy) {
                const std::size_t row = std::size_t(yy) * pm.width;
                for (int xx = x_lo; xx <= x_hi; ++xx) {
                    if (pm.mask[row + xx] == 0) {
                        sum += pm.values[row + xx];
                        ++count;
                    }
                }
            }
            const std::size_t i = std::size_t(y) * pm.width + x;
            if (count == 0) {
                out.mask[i] = 1;
                out.values[i] = 0.0f;
            } else {
                out.mask[i] = 0;
                out.values[i] = float(sum / count);
            }
        }
    }
    return out;
}

std::size_t cafo_pixel_count(const ProbMap& pm, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw InvalidArgument("pixel threshold must lie in (0, 1)");
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < pm.pixel_count(); ++i) {
        if (pm.mask[i] == 0 && double(pm.values[i]) >= threshold) {
            ++count;
        }
    }
    return count;
}

SceneSeries to_scene_series(const ProbMapSeries& series) {
    SceneSeries out;
    out.location_id = series.location_id;
    out.pixel_size_m = series.pixel_size_m;
    out.frames.reserve(series.maps.size());
    for (const ProbMap& pm : series.maps) {
        Frame f;
        f.width = pm.width;
        f.height = pm.height;
        f.bands = {std::string(kBandProb)};
        f.pixels = pm.values;
        f.mask = pm.mask;
        f.timestamp = pm.timestamp;
        out.frames.push_back(std::move(f));
    }
    return out;
}

ProbMapSeries to_prob_series(const SceneSeries& series) {
    ProbMapSeries out;
    out.location_id = series.location_id;
    out.pixel_size_m = series.pixel_size_m;
    out.maps.reserve(series.frames.size());
    for (const Frame& f : series.frames) {
        if (f.bands.size() != 1 || f.bands.front() != kBandProb) {
            throw InvalidArgument("probability stack must have exactly one PROB band");
        }
        ProbMap pm;
        pm.width = f.width;
        pm.height = f.height;
        pm.values = f.pixels;
        pm.mask = f.mask;
        pm.timestamp = f.timestamp;
        out.maps.push_back(std::move(pm));
    }
    return out;
}

ProbMapSeries read_prob_stack(const std::filesystem::path& dir) {
    ProbMapSeries series;
    try {
        series = to_prob_series(read_scene_stack(dir));
        series.validate();
    } catch (const InvalidArgument& e) {
        throw IoError("invalid probability stack " + dir.string() + ": " + e.what());
    }
    return series;
}

void write_prob_stack(const ProbMapSeries& series, const std::filesystem::path& dir) {
    series.validate();
    write_scene_stack(to_scene_series(series), dir);
}

}  // namespace shedwatch
