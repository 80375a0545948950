#include <atomic>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "shedwatch/baselines.hpp"
#include "shedwatch/cli.hpp"
#include "shedwatch/detector.hpp"
#include "shedwatch/report_io.hpp"
#include "shedwatch/scene_store.hpp"
#include "shedwatch/spectral.hpp"
#include "test_util.hpp"

namespace shedwatch {
namespace {

namespace fs = std::filesystem;

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// A small benchmark shared by the tests in this file.
class CliBenchmark : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new test::TempDir();
        const CliRun r = run({"synth", "--out", bench().string(), "--static", "4", "--expanded", "2",
                           "--width", "40", "--height", "60", "--frames", "24", "--seed", "7"});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    static void TearDownTestSuite() {
        delete dir_;
        dir_ = nullptr;
    }
    static fs::path bench() { return dir_->path() / "bench"; }
    static fs::path scratch(const std::string& name) { return dir_->path() / name; }

private:
    static test::TempDir* dir_;
};

test::TempDir* CliBenchmark::dir_ = nullptr;

TEST(Cli, UsageErrorsExitWithTwo) {
    test::TempDir dir;
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"synth", "--out", (dir.path() / "b").string(), "--static", "0", "--expanded", "0"}).code,
              kExitUsage);
    EXPECT_EQ(run({"synth", "--out", (dir.path() / "b").string(), "--noise", "0.7"}).code, kExitUsage);
    EXPECT_EQ(run({"detect", "--input", (dir.path() / "nowhere").string(), "--out", dir.path().string()}).code,
              kExitUsage);
    test::write_file(dir.path() / "r.jsonl", "");
    EXPECT_EQ(run({"evaluate", "--reports", (dir.path() / "r.jsonl").string(), "--labels",
                   (dir.path() / "missing.csv").string(), "--out", dir.path().string()})
                  .code,
              kExitUsage);
}

TEST(Cli, HelpExitsWithZero) {
    const CliRun r = run({"--help"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("detect"), std::string::npos);
}

TEST(Cli, RuntimeFailureExitsWithOne) {
    test::TempDir dir;
    fs::create_directories(dir.path() / "loc" / "prob");
    test::write_file(dir.path() / "loc" / "prob" / "manifest.json", "{not json");
    const CliRun r = run({"detect", "--input", dir.path().string(), "--out", (dir.path() / "o").string()});
    EXPECT_EQ(r.code, kExitFailure);
    EXPECT_NE(r.err.find("manifest"), std::string::npos);
}

TEST_F(CliBenchmark, SynthWritesLocationsAndLabels) {
    int locations = 0;
    for (const auto& e : fs::directory_iterator(bench())) {
        locations += e.is_directory() ? 1 : 0;
    }
    EXPECT_EQ(locations, 6);
    const auto labels = read_labels(bench() / "labels.csv");
    ASSERT_EQ(labels.size(), 6u);
    int positives = 0;
    for (const auto& l : labels) positives += l.expanded ? 1 : 0;
    EXPECT_EQ(positives, 2);
    const auto cfg = nlohmann::json::parse(test::read_file(bench() / "run_config.json"));
    EXPECT_EQ(cfg.at("synth").at("seed"), 7);
}

TEST_F(CliBenchmark, SynthIsReproducible) {
    const fs::path again = scratch("bench_again");
    const auto args = [&](const fs::path& out) {
        return std::vector<std::string>{"synth", "--out", out.string(), "--static", "4", "--expanded", "2",
                                        "--width", "40", "--height", "60", "--frames", "24", "--seed", "7"};
    };
    ASSERT_EQ(run(args(again)).code, 0);
    auto a = test::tree_contents(bench());
    auto b = test::tree_contents(again);
    // run_config.json records the output path itself; everything else matches.
    a.erase("run_config.json");
    b.erase("run_config.json");
    EXPECT_EQ(a, b);
    const auto before = test::tree_contents(again);
    ASSERT_EQ(run(args(again)).code, 0);
    EXPECT_EQ(test::tree_contents(again), before);
}

TEST_F(CliBenchmark, SegmentEqualsLibraryComposition) {
    const fs::path scene = bench() / "site_0000" / "scene";
    const fs::path out = scratch("segmented");
    const CliRun r = run({"segment", "--input", scene.string(), "--out", out.string(), "--gain", "8",
                       "--kernel", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const SceneSeries scenes = read_scene_stack(scene);
    const ProbMapSeries got = read_prob_stack(out);
    ASSERT_EQ(got.size(), scenes.size());
    for (std::size_t t = 0; t < scenes.size(); ++t) {
        EXPECT_EQ(got.maps[t], smooth(pseudo_segment(scenes.frames[t], 8.0, 0.0), 5));
    }
    EXPECT_EQ(run({"segment", "--input", scene.string(), "--out", out.string(), "--kernel", "4"}).code,
              kExitUsage);
}

TEST_F(CliBenchmark, SegmentFromConfidences) {
    test::TempDir dir;
    SceneSeries s;
    s.location_id = "conf";
    for (int t = 0; t < 3; ++t) {
        Frame f = Frame::blank(4, 4, {"CONF"}, Date(2020, 1, 1) + t);
        for (std::size_t i = 0; i < f.pixels.size(); ++i) f.pixels[i] = float(int(i) - 8 + t);
        s.frames.push_back(f);
    }
    write_scene_stack(s, dir.path() / "in");
    ASSERT_EQ(run({"segment", "--input", (dir.path() / "in").string(), "--out",
                   (dir.path() / "out").string(), "--from-confidences", "--kernel", "1"})
                  .code,
              0);
    const ProbMapSeries got = read_prob_stack(dir.path() / "out");
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_EQ(got.maps[t], confidences_to_probs(confidence_map(s.frames[t]), s.frames[t].timestamp));
    }
}

TEST_F(CliBenchmark, DetectBaselineEvaluatePipeline) {
    const fs::path out = scratch("run");
    CliRun r = run({"detect", "--input", bench().string(), "--out", out.string(), "--threads", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto reports = read_detection_reports(out / "reports.jsonl");
    ASSERT_EQ(reports.size(), 6u);

    // Each record equals a direct library call with the documented seed rule.
    const std::string first = test::read_file(out / "reports.jsonl");
    ASSERT_EQ(run({"detect", "--input", bench().string(), "--out", out.string(), "--threads", "1"}).code, 0);
    EXPECT_EQ(test::read_file(out / "reports.jsonl"), first);

    for (const char* method : {"bcp-ndvi", "bcp-pixels", "bfast-ndvi"}) {
        r = run({"baseline", "--method", method, "--input", bench().string(), "--out", out.string()});
        ASSERT_EQ(r.code, 0) << method << ": " << r.err;
    }
    const auto records = read_report_stream(out / "reports.jsonl");
    EXPECT_EQ(records.size(), 24u);

    // Baseline records equal direct library calls.
    const ScalarSeries ndvi_series = series_from_scenes(read_scene_stack(bench() / "site_0001" / "scene"));
    const BaselineResult direct = bocpd(ndvi_series, {}, kMethodBcpNdvi);
    for (const auto& rec : records) {
        if (rec.method == kMethodBcpNdvi && rec.location_id == "site_0001") {
            EXPECT_EQ(rec.line, baseline_to_json(direct));
        }
    }

    const std::string before = test::read_file(out / "reports.jsonl");
    ASSERT_EQ(run({"baseline", "--method", "bfast-ndvi", "--input", bench().string(), "--out", out.string()}).code, 0);
    EXPECT_EQ(test::read_file(out / "reports.jsonl"), before);

    const fs::path eval = scratch("eval");
    r = run({"evaluate", "--reports", (out / "reports.jsonl").string(), "--labels",
             (bench() / "labels.csv").string(), "--out", eval.string(), "--permutations", "200"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("| MLE |"), std::string::npos);
    for (const char* f : {"eval.json", "roc.csv", "cost_curve.csv", "table.md", "run_config.json"}) {
        EXPECT_TRUE(fs::exists(eval / f)) << f;
    }
    const auto doc = nlohmann::json::parse(test::read_file(eval / "eval.json"));
    ASSERT_EQ(doc.at("methods").size(), 4u);
    EXPECT_EQ(doc.at("methods")[0].at("method"), "MLE");
    const std::string eval_before = test::read_file(eval / "eval.json");
    ASSERT_EQ(run({"evaluate", "--reports", (out / "reports.jsonl").string(), "--labels",
                   (bench() / "labels.csv").string(), "--out", eval.string(), "--permutations", "200"})
                  .code,
              0);
    EXPECT_EQ(test::read_file(eval / "eval.json"), eval_before);
}

TEST_F(CliBenchmark, EvaluatePerfectScoresGiveUnitAuc) {
    test::TempDir dir;
    std::string lines;
    std::string labels = "location_id,expanded\n";
    for (int i = 0; i < 6; ++i) {
        const bool pos = i < 2;
        lines += baseline_to_json({"l" + std::to_string(i), "BCP-NDVI", pos ? 0.9 : 0.1, {}, {}}) + "\n";
        labels += "l" + std::to_string(i) + (pos ? ",1\n" : ",0\n");
    }
    test::write_file(dir.path() / "r.jsonl", lines);
    test::write_file(dir.path() / "labels.csv", labels);
    const CliRun r = run({"evaluate", "--reports", (dir.path() / "r.jsonl").string(), "--labels",
                       (dir.path() / "labels.csv").string(), "--out", (dir.path() / "e").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(test::read_file(dir.path() / "e" / "eval.json"));
    EXPECT_EQ(doc.at("methods")[0].at("auc"), 1.0);
}

TEST_F(CliBenchmark, NullFromAttachesPercentiles) {
    const fs::path null_out = scratch("null_run");
    ASSERT_EQ(run({"detect", "--input", (bench() / "site_0000" / "prob").string(), "--out",
                   null_out.string()})
                  .code,
              0);
    const fs::path out = scratch("with_null");
    const CliRun r = run({"detect", "--input", bench().string(), "--out", out.string(), "--null-from",
                       null_out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& rep : read_detection_reports(out / "reports.jsonl")) {
        EXPECT_TRUE(rep.null_percentile.has_value());
    }
}

TEST(ParallelFor, CoversEveryIndexAndRethrowsLowestFailure) {
    std::vector<int> hits(100, 0);
    parallel_for(100, 8, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 17 || i == 31) throw std::runtime_error(std::to_string(i));
        });
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_EQ(std::string(e.what()), "17");
    }
}

}  // namespace
}  // namespace shedwatch
