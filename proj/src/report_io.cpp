#include "shedwatch/report_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "shedwatch/errors.hpp"

namespace shedwatch {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

ojson parse_json(std::string_view line) {
    try {
        return ojson::parse(line);
    } catch (const ojson::exception& e) {
        throw IoError(std::string("malformed report line: ") + e.what());
    }
}

template <typename T>
T field(const ojson& j, const char* key) {
    if (!j.contains(key)) {
        throw IoError(std::string("report line lacks \"") + key + "\"");
    }
    try {
        return j.at(key).get<T>();
    } catch (const ojson::exception& e) {
        throw IoError(std::string("report field \"") + key + "\": " + e.what());
    }
}

}  // namespace

std::vector<std::int64_t> rle_encode(const BinaryMap& map) {
    std::vector<std::int64_t> runs;
    for (std::uint8_t cell : map.cells) {
        if (!runs.empty() && runs[runs.size() - 2] == cell) {
            ++runs.back();
        } else {
            runs.push_back(cell);
            runs.push_back(1);
        }
    }
    return runs;
}

BinaryMap rle_decode(int width, int height, std::span<const std::int64_t> runs) {
    if (width < 0 || height < 0 || runs.size() % 2 != 0) {
        throw InvalidArgument("malformed run-length encoding");
    }
    BinaryMap map;
    map.width = width;
    map.height = height;
    for (std::size_t i = 0; i < runs.size(); i += 2) {
        if ((runs[i] != 0 && runs[i] != 1) || runs[i + 1] <= 0) {
            throw InvalidArgument("malformed run-length encoding");
        }
        map.cells.insert(map.cells.end(), std::size_t(runs[i + 1]), std::uint8_t(runs[i]));
    }
    if (map.cells.size() != std::size_t(width) * std::size_t(height)) {
        throw InvalidArgument("run-length encoding does not cover the map");
    }
    return map;
}

std::string detection_to_json(const DetectionReport& r) {
    ojson j;
    j["method"] = kMethodMle;
    j["location_id"] = r.location_id;
    j["score"] = r.test_statistic;
    j["test_statistic"] = r.test_statistic;
    j["log_likelihood_unrestricted"] = r.log_likelihood_unrestricted;
    j["log_likelihood_static"] = r.log_likelihood_static;
    j["t_star_index"] = r.t_star_index;
    j["t_star_date"] = r.t_star_date.iso();
    j["expansion_area_m2"] = r.expansion_area_m2;
    j["null_percentile"] = r.null_percentile ? ojson(*r.null_percentile) : ojson(nullptr);
    j["width"] = r.footprint_before.width;
    j["height"] = r.footprint_before.height;
    j["footprint_before_rle"] = rle_encode(r.footprint_before);
    j["footprint_added_rle"] = rle_encode(r.footprint_added);
    return j.dump();
}

DetectionReport detection_from_json(std::string_view line) {
    const ojson j = parse_json(line);
    if (field<std::string>(j, "method") != kMethodMle) {
        throw IoError("not a detector record");
    }
    DetectionReport r;
    r.location_id = field<std::string>(j, "location_id");
    r.test_statistic = field<double>(j, "test_statistic");
    r.log_likelihood_unrestricted = field<double>(j, "log_likelihood_unrestricted");
    r.log_likelihood_static = field<double>(j, "log_likelihood_static");
    r.t_star_index = field<double>(j, "t_star_index");
    try {
        r.t_star_date = Date::parse(field<std::string>(j, "t_star_date"));
        const int w = field<int>(j, "width");
        const int h = field<int>(j, "height");
        r.footprint_before = rle_decode(w, h, field<std::vector<std::int64_t>>(j, "footprint_before_rle"));
        r.footprint_added = rle_decode(w, h, field<std::vector<std::int64_t>>(j, "footprint_added_rle"));
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("invalid detector record: ") + e.what());
    }
    r.expansion_area_m2 = field<double>(j, "expansion_area_m2");
    if (j.contains("null_percentile") && !j.at("null_percentile").is_null()) {
        r.null_percentile = field<double>(j, "null_percentile");
    }
    return r;
}

std::string baseline_to_json(const BaselineResult& r) {
    ojson j;
    j["method"] = r.method;
    j["location_id"] = r.location_id;
    j["score"] = r.confidence;
    j["confidence"] = r.confidence;
    j["break_index"] = r.break_index ? ojson(*r.break_index) : ojson(nullptr);
    j["break_date"] = r.break_date ? ojson(r.break_date->iso()) : ojson(nullptr);
    return j.dump();
}

BaselineResult baseline_from_json(std::string_view line) {
    const ojson j = parse_json(line);
    BaselineResult r;
    r.method = field<std::string>(j, "method");
    r.location_id = field<std::string>(j, "location_id");
    r.confidence = field<double>(j, "confidence");
    if (j.contains("break_index") && !j.at("break_index").is_null()) {
        r.break_index = field<std::size_t>(j, "break_index");
    }
    if (j.contains("break_date") && !j.at("break_date").is_null()) {
        try {
            r.break_date = Date::parse(field<std::string>(j, "break_date"));
        } catch (const InvalidArgument& e) {
            throw IoError(std::string("invalid baseline record: ") + e.what());
        }
    }
    return r;
}

ReportRecord parse_report_line(std::string_view line) {
    const ojson j = parse_json(line);
    ReportRecord rec;
    rec.method = field<std::string>(j, "method");
    rec.location_id = field<std::string>(j, "location_id");
    rec.score = field<double>(j, "score");
    if (j.contains("expansion_area_m2") && j.at("expansion_area_m2").is_number()) {
        rec.area_m2 = j.at("expansion_area_m2").get<double>();
    }
    rec.line = std::string(line);
    return rec;
}

std::vector<ReportRecord> read_report_stream(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read report stream " + path.string());
    }
    std::vector<ReportRecord> records;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) {
            continue;
        }
        try {
            records.push_back(parse_report_line(line));
        } catch (const IoError& e) {
            throw IoError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return records;
}

void write_report_stream(const fs::path& path, std::span<const std::string> lines) {
    std::string text;
    for (const std::string& l : lines) {
        text += l;
        text += '\n';
    }
    write_text_file(path, text);
}

void merge_report_stream(const fs::path& path, std::span<const std::string> lines) {
    std::set<std::pair<std::string, std::string>> replaced;
    for (const std::string& l : lines) {
        const ReportRecord rec = parse_report_line(l);
        replaced.emplace(rec.method, rec.location_id);
    }
    std::vector<std::string> merged;
    if (fs::exists(path)) {
        for (const ReportRecord& rec : read_report_stream(path)) {
            if (!replaced.contains({rec.method, rec.location_id})) {
                merged.push_back(rec.line);
            }
        }
    }
    merged.insert(merged.end(), lines.begin(), lines.end());
    // Canonical order, so re-running any subcommand rewrites identical bytes.
    std::vector<std::pair<std::pair<std::string, std::string>, std::string>> keyed;
    for (std::string& l : merged) {
        const ReportRecord rec = parse_report_line(l);
        keyed.push_back({{rec.method, rec.location_id}, std::move(l)});
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    merged.clear();
    for (auto& k : keyed) {
        merged.push_back(std::move(k.second));
    }
    write_report_stream(path, merged);
}

std::vector<DetectionReport> read_detection_reports(const fs::path& path) {
    std::vector<DetectionReport> reports;
    for (const ReportRecord& rec : read_report_stream(path)) {
        if (rec.method == kMethodMle) {
            reports.push_back(detection_from_json(rec.line));
        }
    }
    return reports;
}

void write_ranking_csv(const fs::path& path, std::span<const DetectionReport> ranked) {
    std::ostringstream out;
    out.precision(17);
    out << "location_id,test_statistic,expansion_area_m2,null_percentile\n";
    for (const DetectionReport& r : ranked) {
        out << r.location_id << ',' << r.test_statistic << ',' << r.expansion_area_m2 << ',';
        if (r.null_percentile) {
            out << *r.null_percentile;
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<LabelRow> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read labels " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("labels file is empty: " + path.string());
    }
    std::map<std::string, std::size_t> column;
    const std::vector<std::string> header = split_csv(line);
    for (std::size_t i = 0; i < header.size(); ++i) {
        column[trim(header[i])] = i;
    }
    if (!column.contains("location_id") || !column.contains("expanded")) {
        throw IoError("labels header needs location_id and expanded columns");
    }
    auto cell = [&column](const std::vector<std::string>& cells, const char* name) {
        const auto it = column.find(name);
        if (it == column.end() || it->second >= cells.size()) {
            return std::string();
        }
        return trim(cells[it->second]);
    };

    std::vector<LabelRow> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) {
            continue;
        }
        const std::vector<std::string> cells = split_csv(line);
        LabelRow row;
        row.location_id = cell(cells, "location_id");
        const std::string expanded = cell(cells, "expanded");
        if (row.location_id.empty() || (expanded != "0" && expanded != "1")) {
            throw IoError(path.string() + ":" + std::to_string(number) +
                          ": expected location_id and expanded in {0,1}");
        }
        row.expanded = expanded == "1";
        try {
            if (const std::string t = cell(cells, "true_t_star"); !t.empty()) {
                row.true_t_star = std::stoi(t);
            }
            if (const std::string a = cell(cells, "true_area_m2"); !a.empty()) {
                row.true_area_m2 = std::stod(a);
            }
        } catch (const std::exception&) {
            throw IoError(path.string() + ":" + std::to_string(number) + ": malformed number");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text_file(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

}  // namespace shedwatch
