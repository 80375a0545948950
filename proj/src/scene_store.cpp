#include "shedwatch/scene_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shedwatch/errors.hpp"

namespace shedwatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(sizeof(float) == 4, "float32 raster payloads require 4-byte float");

std::vector<char> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (size < 0) {
        throw IoError("cannot size " + path.string());
    }
    in.seekg(0, std::ios::beg);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(bytes.data(), size)) {
        throw IoError("short read on " + path.string());
    }
    return bytes;
}

void write_file_bytes(const fs::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(static_cast<const char*>(data), std::streamsize(size));
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

void to_little_endian(std::vector<float>& values) {
    if constexpr (std::endian::native == std::endian::big) {
        for (float& v : values) {
            v = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(v)));
        }
    }
}

std::string frame_file_name(std::size_t index) {
    std::ostringstream name;
    name << "frame_";
    name.width(4);
    name.fill('0');
    name << index << ".f32";
    return name.str();
}

}  // namespace

Frame Frame::blank(int width, int height, std::vector<std::string> bands, Date timestamp) {
    Frame f;
    f.width = width;
    f.height = height;
    f.bands = std::move(bands);
    f.pixels.assign(f.pixel_count() * f.bands.size(), 0.0f);
    f.mask.assign(f.pixel_count(), 0);
    f.timestamp = timestamp;
    return f;
}

std::optional<std::size_t> Frame::band_index(std::string_view name) const {
    const auto it = std::find(bands.begin(), bands.end(), name);
    if (it == bands.end()) {
        return std::nullopt;
    }
    return std::size_t(it - bands.begin());
}

std::size_t Frame::require_band(std::string_view name) const {
    const auto idx = band_index(name);
    if (!idx) {
        throw InvalidArgument("frame has no " + std::string(name) + " band");
    }
    return *idx;
}

void Frame::validate() const {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("frame dimensions must be positive");
    }
    if (bands.empty()) {
        throw InvalidArgument("frame has no bands");
    }
    if (pixels.size() != pixel_count() * bands.size() || mask.size() != pixel_count()) {
        throw InvalidArgument("frame buffers do not match width x height x bands");
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto values = band(b);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!missing(i) && !(std::isfinite(values[i]) && values[i] >= 0.0f)) {
                // CONF rasters carry signed segmenter confidences.
                if (bands[b] == kBandConf && std::isfinite(values[i])) {
                    continue;
                }
                throw InvalidArgument("frame holds a negative or non-finite value in band " +
                                      bands[b]);
            }
        }
    }
}

void SceneSeries::validate() const {
    if (frames.size() < 2) {
        throw InvalidArgument("series needs at least 2 frames");
    }
    if (!(pixel_size_m > 0.0)) {
        throw InvalidArgument("pixel_size_m must be positive");
    }
    const Frame& first = frames.front();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        f.validate();
        if (f.width != first.width || f.height != first.height || f.bands != first.bands) {
            throw InvalidArgument("frames differ in dimensions or band set");
        }
        if (i > 0 && !(frames[i - 1].timestamp < f.timestamp)) {
            throw InvalidArgument("frame timestamps must strictly increase");
        }
    }
}

SceneSeries read_scene_stack(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw IoError("missing manifest: " + manifest_path.string());
    }
    json manifest;
    try {
        std::ifstream in(manifest_path);
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("unreadable manifest " + manifest_path.string() + ": " + e.what());
    }

    SceneSeries series;
    int width = 0;
    int height = 0;
    std::vector<std::string> bands;
    std::vector<std::string> timestamps;
    std::vector<std::string> files;
    try {
        series.location_id = manifest.at("location_id").get<std::string>();
        series.pixel_size_m = manifest.at("pixel_size_m").get<double>();
        width = manifest.at("width").get<int>();
        height = manifest.at("height").get<int>();
        bands = manifest.at("bands").get<std::vector<std::string>>();
        timestamps = manifest.at("timestamps").get<std::vector<std::string>>();
        files = manifest.at("frame_files").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    if (width <= 0 || height <= 0 || bands.empty()) {
        throw IoError("manifest declares empty raster dimensions");
    }
    if (timestamps.size() != files.size()) {
        throw IoError("manifest timestamps and frame_files differ in length");
    }

    const std::size_t npix = std::size_t(width) * std::size_t(height);
    const std::size_t nvalues = npix * bands.size();
    series.frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        Frame f;
        f.width = width;
        f.height = height;
        f.bands = bands;
        try {
            f.timestamp = Date::parse(timestamps[i]);
        } catch (const InvalidArgument& e) {
            throw IoError(std::string("manifest timestamp: ") + e.what());
        }
        if (!series.frames.empty() && !(series.frames.back().timestamp < f.timestamp)) {
            throw IoError("manifest timestamps are not strictly increasing");
        }

        const std::vector<char> raw = read_file_bytes(dir / files[i]);
        if (raw.size() != nvalues * sizeof(float)) {
            std::ostringstream msg;
            msg << "dimension mismatch in " << files[i] << ": expected " << nvalues
                << " float32 values, payload holds " << raw.size() / sizeof(float);
            throw IoError(msg.str());
        }
        f.pixels.resize(nvalues);
        std::memcpy(f.pixels.data(), raw.data(), raw.size());
        to_little_endian(f.pixels);  // symmetric swap on big-endian hosts

        const std::vector<char> mask = read_file_bytes(dir / (files[i] + ".mask"));
        if (mask.size() != npix) {
            throw IoError("dimension mismatch in mask for " + files[i]);
        }
        f.mask.resize(npix);
        for (std::size_t k = 0; k < npix; ++k) {
            if (mask[k] != 0 && mask[k] != 1) {
                throw IoError("mask for " + files[i] + " holds a value other than 0/1");
            }
            f.mask[k] = std::uint8_t(mask[k]);
        }
        series.frames.push_back(std::move(f));
    }
    try {
        series.validate();
    } catch (const InvalidArgument& e) {
        throw IoError("invalid stack " + dir.string() + ": " + e.what());
    }
    return series;
}

void write_scene_stack(const SceneSeries& series, const fs::path& dir) {
    series.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }

    json manifest;
    manifest["location_id"] = series.location_id;
    manifest["pixel_size_m"] = series.pixel_size_m;
    manifest["width"] = series.width();
    manifest["height"] = series.height();
    manifest["bands"] = series.frames.front().bands;
    std::vector<std::string> timestamps;
    std::vector<std::string> files;
    for (std::size_t i = 0; i < series.frames.size(); ++i) {
        const Frame& f = series.frames[i];
        timestamps.push_back(f.timestamp.iso());
        files.push_back(frame_file_name(i));

        std::vector<float> payload = f.pixels;
        to_little_endian(payload);
        write_file_bytes(dir / files.back(), payload.data(), payload.size() * sizeof(float));
        write_file_bytes(dir / (files.back() + ".mask"), f.mask.data(), f.mask.size());
    }
    manifest["timestamps"] = timestamps;
    manifest["frame_files"] = files;

    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) {
        throw IoError("cannot write manifest in " + dir.string());
    }
    out << manifest.dump(2) << '\n';
}

Frame clip_center(const Frame& frame, int out_width, int out_height) {
    if (out_width <= 0 || out_height <= 0) {
        throw InvalidArgument("clip window must be positive");
    }
    if (out_width > frame.width || out_height > frame.height) {
        throw InvalidArgument("clip window larger than frame");
    }
    const int x0 = (frame.width - out_width) / 2;
    const int y0 = (frame.height - out_height) / 2;

    Frame out = Frame::blank(out_width, out_height, frame.bands, frame.timestamp);
    for (std::size_t b = 0; b < frame.bands.size(); ++b) {
        const auto src = frame.band(b);
        auto dst = out.band(b);
        for (int y = 0; y < out_height; ++y) {
            const auto row = src.subspan(std::size_t(y + y0) * frame.width + x0, out_width);
            std::copy(row.begin(), row.end(), dst.begin() + std::size_t(y) * out_width);
        }
    }
    for (int y = 0; y < out_height; ++y) {
        const auto* row = frame.mask.data() + std::size_t(y + y0) * frame.width + x0;
        std::copy(row, row + out_width, out.mask.begin() + std::size_t(y) * out_width);
    }
    return out;
}

double missing_fraction(const Frame& frame) {
    if (frame.pixel_count() == 0) {
        return 0.0;
    }
    const auto n = std::count_if(frame.mask.begin(), frame.mask.end(),
                                 [](std::uint8_t m) { return m != 0; });
    return double(n) / double(frame.pixel_count());
}

SceneSeries filter_frames(const SceneSeries& series, double max_missing) {
    if (!(max_missing >= 0.0 && max_missing <= 1.0)) {
        throw InvalidArgument("max_missing must lie in [0, 1]");
    }
    SceneSeries out;
    out.location_id = series.location_id;
    out.pixel_size_m = series.pixel_size_m;
    for (const Frame& f : series.frames) {
        if (missing_fraction(f) <= max_missing) {
            out.frames.push_back(f);
        }
    }
    if (out.frames.size() < 2) {
        throw InvalidArgument("fewer than 2 frames survive the missing-pixel filter for " +
                              series.location_id);
    }
    return out;
}

}  // namespace shedwatch
