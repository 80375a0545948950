#include "shedwatch/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "shedwatch/baselines.hpp"
#include "shedwatch/detector.hpp"
#include "shedwatch/errors.hpp"
#include "shedwatch/evaluation.hpp"
#include "shedwatch/random.hpp"
#include "shedwatch/report_io.hpp"
#include "shedwatch/scene_store.hpp"
#include "shedwatch/spectral.hpp"
#include "shedwatch/synthgen.hpp"

namespace shedwatch {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kReportFile = "reports.jsonl";
constexpr const char* kRankingFile = "ranking.csv";
constexpr const char* kRunConfigFile = "run_config.json";

// Stable 64-bit FNV-1a, used to give every location its own fit seed
// independent of processing order.
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// run_config.json holds one entry per subcommand run in that directory.
void record_run_config(const fs::path& dir, const std::string& key, const ojson& config) {
    const fs::path path = dir / kRunConfigFile;
    ojson all = ojson::object();
    if (fs::exists(path)) {
        std::ifstream in(path);
        try {
            all = ojson::parse(in);
        } catch (const ojson::exception&) {
            all = ojson::object();
        }
        if (!all.is_object()) {
            all = ojson::object();
        }
    }
    all[key] = config;
    write_text_file(path, all.dump(2) + "\n");
}

void require_directory(const fs::path& p, const char* what) {
    if (!fs::is_directory(p)) {
        throw InvalidArgument(std::string(what) + " is not a directory: " + p.string());
    }
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
    std::string out;
    int n_static = 200;
    int n_expanded = 50;
    std::uint64_t seed = 42;
    SyntheticSpec spec;
    bool no_scenes = false;
    std::string probability_source = "noisy_indicator";
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
    BenchmarkConfig config;
    config.n_static = o.n_static;
    config.n_expanded = o.n_expanded;
    config.seed = o.seed;
    config.template_spec = o.spec;
    config.template_spec.probability_source = o.probability_source == "pseudo_segment"
                                                  ? ProbabilitySource::pseudo_segment
                                                  : ProbabilitySource::noisy_indicator;
    config.validate();
    const auto entries = generate_benchmark(config, o.out, !o.no_scenes);

    ojson cfg;
    cfg["out"] = o.out;
    cfg["static"] = o.n_static;
    cfg["expanded"] = o.n_expanded;
    cfg["seed"] = o.seed;
    cfg["width"] = o.spec.width;
    cfg["height"] = o.spec.height;
    cfg["frames"] = o.spec.n_frames;
    cfg["noise"] = o.spec.noise;
    cfg["missing_rate"] = o.spec.missing_rate;
    cfg["artifact_rate"] = o.spec.artifact_rate;
    cfg["transition_frames"] = o.spec.transition_frames;
    cfg["pixel_size_m"] = o.spec.pixel_size_m;
    cfg["probability_source"] = o.probability_source;
    cfg["scenes"] = !o.no_scenes;
    record_run_config(o.out, "synth", cfg);
    out << "wrote " << entries.size() << " locations to " << o.out << '\n';
    return kExitOk;
}

// -------------------------------------------------------------- segment

struct SegmentOptions {
    std::string input;
    std::string out;
    double gain = kDefaultSegmentGain;
    double center = kDefaultSegmentCenter;
    int kernel = kDefaultSmoothKernel;
    bool from_confidences = false;
    std::optional<double> max_missing;
};

int cmd_segment(const SegmentOptions& o, std::ostream& out) {
    require_directory(o.input, "--input");
    if (!(o.gain > 0.0)) {
        throw InvalidArgument("--gain must be positive");
    }
    if (o.kernel < 1 || o.kernel % 2 == 0) {
        throw InvalidArgument("--kernel must be odd and positive");
    }
    SceneSeries scenes = read_scene_stack(o.input);
    if (o.max_missing) {
        scenes = filter_frames(scenes, *o.max_missing);
    }
    ProbMapSeries probs;
    probs.location_id = scenes.location_id;
    probs.pixel_size_m = scenes.pixel_size_m;
    for (const Frame& f : scenes.frames) {
        const ProbMap raw = o.from_confidences ? confidences_to_probs(confidence_map(f), f.timestamp)
                                               : pseudo_segment(f, o.gain, o.center);
        probs.maps.push_back(smooth(raw, o.kernel));
    }
    write_prob_stack(probs, o.out);

    ojson cfg;
    cfg["input"] = o.input;
    cfg["out"] = o.out;
    cfg["gain"] = o.gain;
    cfg["center"] = o.center;
    cfg["kernel"] = o.kernel;
    cfg["from_confidences"] = o.from_confidences;
    cfg["max_missing"] = o.max_missing ? ojson(*o.max_missing) : ojson(nullptr);
    record_run_config(o.out, "segment", cfg);
    out << "segmented " << probs.maps.size() << " frames of " << probs.location_id << '\n';
    return kExitOk;
}

// --------------------------------------------------------------- detect

struct DetectOptions {
    std::string input;
    std::string out;
    std::string null_from;
    int threads = 1;
    std::uint64_t seed = 0;
    FitConfig fit;
};

ojson fit_config_json(const FitConfig& c) {
    ojson j;
    j["max_iterations"] = c.max_iterations;
    j["step_size"] = c.step_size;
    j["momentum"] = c.momentum;
    j["convergence_tol"] = c.convergence_tol;
    j["alpha"] = c.alpha;
    j["restarts"] = c.restarts;
    j["sparsity"] = c.sparsity;
    return j;
}

std::vector<DetectionReport> detect_all(const fs::path& root, const DetectOptions& o,
                                        const NullDistribution* null) {
    const std::vector<LocationInput> inputs = discover_stacks(root, "prob");
    if (inputs.empty()) {
        throw InvalidArgument("no probability stacks under " + root.string());
    }
    std::vector<DetectionReport> reports(inputs.size());
    parallel_for(inputs.size(), o.threads, [&](std::size_t i) {
        const ProbMapSeries series = read_prob_stack(inputs[i].stack);
        FitConfig fit = o.fit;
        fit.seed = derive_seed(o.seed, fnv1a(series.location_id));
        reports[i] = detect(series, fit, null);
    });
    std::sort(reports.begin(), reports.end(),
              [](const DetectionReport& a, const DetectionReport& b) {
                  return a.location_id < b.location_id;
              });
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].location_id == reports[i - 1].location_id) {
            throw InvalidArgument("duplicate location_id " + reports[i].location_id);
        }
    }
    return reports;
}

int cmd_detect(const DetectOptions& o, std::ostream& out) {
    require_directory(o.input, "--input");
    if (o.threads < 1) {
        throw InvalidArgument("--threads must be at least 1");
    }
    o.fit.validate();

    std::optional<NullDistribution> null;
    if (!o.null_from.empty()) {
        require_directory(o.null_from, "--null-from");
        const fs::path previous = fs::path(o.null_from) / kReportFile;
        const std::vector<DetectionReport> statics =
            fs::exists(previous) ? read_detection_reports(previous) : detect_all(o.null_from, o, nullptr);
        if (statics.empty()) {
            throw InvalidArgument("--null-from yielded no detector records");
        }
        null = calibrate_null(statics);
    }

    const std::vector<DetectionReport> reports = detect_all(o.input, o, null ? &*null : nullptr);
    std::vector<std::string> lines;
    for (const DetectionReport& r : reports) {
        lines.push_back(detection_to_json(r));
    }
    fs::create_directories(o.out);
    merge_report_stream(fs::path(o.out) / kReportFile, lines);
    const std::vector<DetectionReport> ranked = rank_locations(reports);
    write_ranking_csv(fs::path(o.out) / kRankingFile, ranked);

    ojson cfg;
    cfg["input"] = o.input;
    cfg["out"] = o.out;
    cfg["null_from"] = o.null_from.empty() ? ojson(nullptr) : ojson(o.null_from);
    cfg["threads"] = o.threads;
    cfg["seed"] = o.seed;
    cfg["fit"] = fit_config_json(o.fit);
    cfg["seed_rule"] = "fit seed = derive_seed(seed, fnv1a64(location_id))";
    record_run_config(o.out, "detect", cfg);
    out << "detected " << reports.size() << " locations; top: " << ranked.front().location_id
        << " (TS " << ranked.front().test_statistic << ")\n";
    return kExitOk;
}

// ------------------------------------------------------------- baseline

struct BaselineOptions {
    std::string input;
    std::string out;
    std::string method;
    int threads = 1;
    std::optional<double> hazard;
    double threshold = kDefaultPixelThreshold;
    int harmonics = 2;
};

int cmd_baseline(const BaselineOptions& o, std::ostream& out) {
    require_directory(o.input, "--input");
    if (o.threads < 1) {
        throw InvalidArgument("--threads must be at least 1");
    }
    if (o.hazard && !(*o.hazard > 0.0 && *o.hazard < 1.0)) {
        throw InvalidArgument("--hazard must lie in (0, 1)");
    }
    if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
        throw InvalidArgument("--threshold must lie in (0, 1)");
    }
    if (o.harmonics < 0) {
        throw InvalidArgument("--harmonics must be non-negative");
    }
    const bool pixels = o.method == "bcp-pixels";
    const std::vector<LocationInput> inputs = discover_stacks(o.input, pixels ? "prob" : "scene");
    if (inputs.empty()) {
        throw InvalidArgument(std::string("no ") + (pixels ? "probability" : "scene") +
                              " stacks under " + o.input);
    }
    BocpdConfig bocpd_config;
    bocpd_config.hazard = o.hazard;
    TrendBreakConfig trend_config;
    trend_config.harmonics = o.harmonics;

    std::vector<BaselineResult> results(inputs.size());
    parallel_for(inputs.size(), o.threads, [&](std::size_t i) {
        if (pixels) {
            const ScalarSeries s = series_from_probmaps(read_prob_stack(inputs[i].stack), o.threshold);
            results[i] = bocpd(s, bocpd_config, kMethodBcpPixels);
            return;
        }
        const ScalarSeries s = series_from_scenes(read_scene_stack(inputs[i].stack));
        results[i] = o.method == "bcp-ndvi" ? bocpd(s, bocpd_config, kMethodBcpNdvi)
                                            : trend_break(s, trend_config, kMethodBfastNdvi);
    });
    std::sort(results.begin(), results.end(), [](const BaselineResult& a, const BaselineResult& b) {
        return a.location_id < b.location_id;
    });
    std::vector<std::string> lines;
    for (const BaselineResult& r : results) {
        lines.push_back(baseline_to_json(r));
    }
    fs::create_directories(o.out);
    merge_report_stream(fs::path(o.out) / kReportFile, lines);

    ojson cfg;
    cfg["input"] = o.input;
    cfg["out"] = o.out;
    cfg["method"] = o.method;
    cfg["threads"] = o.threads;
    cfg["hazard"] = o.hazard ? ojson(*o.hazard) : ojson("1/T");
    cfg["threshold"] = o.threshold;
    cfg["harmonics"] = o.harmonics;
    record_run_config(o.out, "baseline:" + o.method, cfg);
    out << "baseline " << o.method << " on " << results.size() << " locations\n";
    return kExitOk;
}

// ------------------------------------------------------------- evaluate

struct EvaluateOptions {
    std::vector<std::string> reports;
    std::string labels;
    std::string out;
    int permutations = kDefaultPermutations;
    std::uint64_t seed = 0;
};

int method_rank(const std::string& m) {
    const std::string_view order[] = {kMethodMle, kMethodBcpNdvi, kMethodBcpPixels, kMethodBfastNdvi};
    for (int i = 0; i < 4; ++i) {
        if (m == order[i]) {
            return i;
        }
    }
    return 4;
}

std::string format_number(double v, int precision) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(precision);
    s << v;
    return s.str();
}

ojson eval_json(const EvalReport& r) {
    ojson j;
    j["method"] = r.method;
    j["n_locations"] = r.n_locations;
    j["n_positive"] = r.n_positive;
    j["auc"] = r.auc;
    j["best_balanced_accuracy"] = {{"threshold", r.best_balanced_accuracy.threshold},
                                   {"value", r.best_balanced_accuracy.value}};
    j["best_f1"] = {{"threshold", r.best_f1.threshold}, {"value", r.best_f1.value}};
    if (r.size_correlation) {
        j["size_correlation"] = {{"r", r.size_correlation->r},
                                 {"p_value", r.size_correlation->p_value},
                                 {"n", r.size_correlation->n}};
    } else {
        j["size_correlation"] = nullptr;
    }
    j["score_separation"] = {{"mean_positive", r.separation.mean_positive},
                             {"mean_negative", r.separation.mean_negative},
                             {"ratio", r.separation.ratio},
                             {"p_value", r.separation.p_value}};
    j["cost_curve"] = r.cost_curve;
    j["expected_random_false_positives"] = r.expected_random_false_positives;
    j["cost_reduction"] = r.cost_reduction;
    ojson roc = ojson::array();
    for (const RocPoint& p : r.roc_points) {
        roc.push_back({p.fpr, p.tpr});
    }
    j["roc_points"] = roc;
    return j;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
    if (o.labels.empty() || !fs::is_regular_file(o.labels)) {
        throw InvalidArgument("labels file not found: " + o.labels);
    }
    if (o.reports.empty()) {
        throw InvalidArgument("at least one --reports file is required");
    }
    if (o.permutations < 1) {
        throw InvalidArgument("--permutations must be positive");
    }
    for (const std::string& r : o.reports) {
        if (!fs::is_regular_file(r)) {
            throw InvalidArgument("report stream not found: " + r);
        }
    }
    std::map<std::string, LabelRow> labels;
    for (LabelRow& row : read_labels(o.labels)) {
        const std::string id = row.location_id;
        labels.emplace(id, std::move(row));
    }

    // method -> location -> record (a later file overrides an earlier one)
    std::map<std::string, std::map<std::string, ReportRecord>> by_method;
    for (const std::string& path : o.reports) {
        for (ReportRecord& rec : read_report_stream(path)) {
            const std::string method = rec.method;
            const std::string id = rec.location_id;
            by_method[method][id] = std::move(rec);
        }
    }
    std::vector<std::string> methods;
    for (const auto& [method, records] : by_method) {
        methods.push_back(method);
    }
    std::stable_sort(methods.begin(), methods.end(), [](const std::string& a, const std::string& b) {
        return method_rank(a) < method_rank(b);
    });

    std::vector<EvalReport> evals;
    for (const std::string& method : methods) {
        std::vector<LabeledScore> scores;
        std::size_t unlabeled = 0;
        for (const auto& [id, rec] : by_method[method]) {
            const auto it = labels.find(id);
            if (it == labels.end()) {
                ++unlabeled;
                continue;
            }
            LabeledScore s{id, rec.score, it->second.expanded, it->second.true_area_m2};
            if (!s.size) {
                s.size = rec.area_m2;
            }
            scores.push_back(std::move(s));
        }
        if (unlabeled > 0) {
            err << "warning: " << unlabeled << " " << method << " records have no label\n";
        }
        evals.push_back(evaluate_method(method, scores, o.permutations, o.seed));
    }

    const fs::path dir(o.out);
    fs::create_directories(dir);
    ojson doc;
    doc["labels"] = o.labels;
    doc["reports"] = o.reports;
    doc["methods"] = ojson::array();
    std::ostringstream roc_csv;
    std::ostringstream cost_csv;
    roc_csv.precision(17);
    roc_csv << "method,threshold,fpr,tpr\n";
    cost_csv << "method,expansion_rank,false_positives\n";
    for (const EvalReport& e : evals) {
        doc["methods"].push_back(eval_json(e));
        for (const RocPoint& p : e.roc_points) {
            roc_csv << e.method << ',' << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
        }
        for (std::size_t k = 0; k < e.cost_curve.size(); ++k) {
            cost_csv << e.method << ',' << (k + 1) << ',' << e.cost_curve[k] << '\n';
        }
    }
    if (!evals.empty()) {
        const EvalReport& e = evals.front();
        doc["random_search"] = {
            {"total", e.n_locations},
            {"expansions", e.n_positive},
            {"expected_inspections", expected_random_cost(e.n_locations, e.n_positive, e.n_positive)},
            {"expected_false_positives", e.expected_random_false_positives}};
    }
    write_text_file(dir / "eval.json", doc.dump(2) + "\n");
    write_text_file(dir / "roc.csv", roc_csv.str());
    write_text_file(dir / "cost_curve.csv", cost_csv.str());

    std::ostringstream table;
    table << "| Method | AUC | Balanced Accuracy | F1 | Pearson r (size) | Cost reduction |\n";
    table << "|---|---|---|---|---|---|\n";
    for (const EvalReport& e : evals) {
        table << "| " << e.method << " | " << format_number(e.auc, 3) << " | "
              << format_number(e.best_balanced_accuracy.value, 3) << " | "
              << format_number(e.best_f1.value, 3) << " | "
              << (e.size_correlation ? format_number(e.size_correlation->r, 3) : std::string("n/a"))
              << " | " << format_number(100.0 * e.cost_reduction, 1) << "% |\n";
    }
    write_text_file(dir / "table.md", table.str());

    ojson cfg;
    cfg["reports"] = o.reports;
    cfg["labels"] = o.labels;
    cfg["out"] = o.out;
    cfg["permutations"] = o.permutations;
    cfg["seed"] = o.seed;
    record_run_config(dir, "evaluate", cfg);
    out << table.str();
    return kExitOk;
}

}  // namespace

std::vector<LocationInput> discover_stacks(const fs::path& root, const std::string& kind) {
    std::vector<LocationInput> found;
    if (fs::exists(root / "manifest.json")) {
        found.push_back({root.filename().string(), root});
        return found;
    }
    std::error_code ec;
    for (const fs::directory_entry& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory() && fs::exists(entry.path() / kind / "manifest.json")) {
            found.push_back({entry.path().filename().string(), entry.path() / kind});
        }
    }
    if (ec) {
        throw IoError("cannot list " + root.string() + ": " + ec.message());
    }
    std::sort(found.begin(), found.end(),
              [](const LocationInput& a, const LocationInput& b) { return a.name < b.name; });
    return found;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t count = std::min<std::size_t>(n, std::size_t(std::max(1, threads)));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < count; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"shedwatch: livestock shed expansion detection from image time series"};
    app.require_subcommand(1);

    SynthOptions synth;
    CLI::App* s = app.add_subcommand("synth", "write a synthetic benchmark");
    s->add_option("--out", synth.out, "output directory")->required();
    s->add_option("--static", synth.n_static, "locations without expansion")->capture_default_str();
    s->add_option("--expanded", synth.n_expanded, "locations with one added shed")->capture_default_str();
    s->add_option("--seed", synth.seed, "master seed")->capture_default_str();
    s->add_option("--width", synth.spec.width, "raster width (px)")->capture_default_str();
    s->add_option("--height", synth.spec.height, "raster height (px)")->capture_default_str();
    s->add_option("--frames", synth.spec.n_frames, "frames per location")->capture_default_str();
    s->add_option("--noise", synth.spec.noise, "probability noise sigma")->capture_default_str();
    s->add_option("--missing-rate", synth.spec.missing_rate, "per-pixel masking rate")->capture_default_str();
    s->add_option("--artifact-rate", synth.spec.artifact_rate, "per-frame transient blob rate")
        ->capture_default_str();
    s->add_option("--transition", synth.spec.transition_frames, "construction frames")->capture_default_str();
    s->add_option("--pixel-size", synth.spec.pixel_size_m, "pixel size (m)")->capture_default_str();
    s->add_option("--probability-source", synth.probability_source, "noisy_indicator | pseudo_segment")
        ->check(CLI::IsMember({"noisy_indicator", "pseudo_segment"}))
        ->capture_default_str();
    s->add_flag("--no-scenes", synth.no_scenes, "write probability stacks only");

    SegmentOptions segment;
    CLI::App* g = app.add_subcommand("segment", "scene stack -> smoothed probability stack");
    g->add_option("--input", segment.input, "scene stack directory")->required();
    g->add_option("--out", segment.out, "probability stack directory")->required();
    g->add_option("--gain", segment.gain, "pseudo-segmenter gain")->capture_default_str();
    g->add_option("--center", segment.center, "pseudo-segmenter NDVI center")->capture_default_str();
    g->add_option("--kernel", segment.kernel, "odd smoothing kernel size")->capture_default_str();
    g->add_flag("--from-confidences", segment.from_confidences, "use the CONF band as logits");
    g->add_option("--max-missing", segment.max_missing, "drop frames with a larger missing fraction");

    DetectOptions det;
    CLI::App* d = app.add_subcommand("detect", "maximum-likelihood expansion detection");
    d->add_option("--input", det.input, "root holding <location>/prob stacks")->required();
    d->add_option("--out", det.out, "output directory")->required();
    d->add_option("--null-from", det.null_from, "static locations (or a previous run) for the null");
    d->add_option("--threads", det.threads, "concurrent locations")->capture_default_str();
    d->add_option("--seed", det.seed, "master seed")->capture_default_str();
    d->add_option("--max-iterations", det.fit.max_iterations)->capture_default_str();
    d->add_option("--step-size", det.fit.step_size)->capture_default_str();
    d->add_option("--momentum", det.fit.momentum)->capture_default_str();
    d->add_option("--tol", det.fit.convergence_tol, "relative convergence tolerance")->capture_default_str();
    d->add_option("--alpha", det.fit.alpha, "transition speed")->capture_default_str();
    d->add_option("--restarts", det.fit.restarts)->capture_default_str();
    d->add_option("--sparsity", det.fit.sparsity, "lambda of the sum(fplus) penalty")->capture_default_str();

    BaselineOptions base;
    CLI::App* b = app.add_subcommand("baseline", "scalar changepoint baselines");
    b->add_option("--input", base.input, "benchmark root")->required();
    b->add_option("--out", base.out, "output directory holding reports.jsonl")->required();
    b->add_option("--method", base.method, "bcp-ndvi | bcp-pixels | bfast-ndvi")
        ->required()
        ->check(CLI::IsMember({"bcp-ndvi", "bcp-pixels", "bfast-ndvi"}));
    b->add_option("--threads", base.threads)->capture_default_str();
    b->add_option("--hazard", base.hazard, "changepoint hazard (default 1/T)");
    b->add_option("--threshold", base.threshold, "pixel-count probability threshold")->capture_default_str();
    b->add_option("--harmonics", base.harmonics, "annual harmonics for bfast-ndvi")->capture_default_str();

    EvaluateOptions eval;
    CLI::App* e = app.add_subcommand("evaluate", "metrics against labels");
    e->add_option("--reports", eval.reports, "report stream files")->required();
    e->add_option("--labels", eval.labels, "labels CSV")->required();
    e->add_option("--out", eval.out, "output directory")->required();
    e->add_option("--permutations", eval.permutations)->capture_default_str();
    e->add_option("--seed", eval.seed)->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    }

    try {
        if (s->parsed()) {
            return cmd_synth(synth, out);
        }
        if (g->parsed()) {
            return cmd_segment(segment, out);
        }
        if (d->parsed()) {
            return cmd_detect(det, out);
        }
        if (b->parsed()) {
            return cmd_baseline(base, out);
        }
        return cmd_evaluate(eval, out, err);
    } catch (const InvalidArgument& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace shedwatch
