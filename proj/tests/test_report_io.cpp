#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "shedwatch/errors.hpp"
#include "shedwatch/random.hpp"
#include "shedwatch/report_io.hpp"
#include "test_util.hpp"

namespace shedwatch {
namespace {

BinaryMap random_binary(int w, int h, Rng& rng) {
    BinaryMap m;
    m.width = w;
    m.height = h;
    for (int i = 0; i < w * h; ++i) m.cells.push_back(rng.bernoulli(0.3) ? 1 : 0);
    return m;
}

DetectionReport sample_report(const std::string& id, double ts, Rng& rng) {
    DetectionReport r;
    r.location_id = id;
    r.test_statistic = ts;
    r.log_likelihood_unrestricted = -1234.5678901234567;
    r.log_likelihood_static = r.log_likelihood_unrestricted - ts;
    r.t_star_index = 41.37;
    r.t_star_date = Date(2021, 7, 14);
    r.footprint_before = random_binary(7, 5, rng);
    r.footprint_added = random_binary(7, 5, rng);
    r.expansion_area_m2 = 9.0 * double(r.footprint_added.count());
    return r;
}

void expect_same(const DetectionReport& a, const DetectionReport& b) {
    EXPECT_EQ(a.location_id, b.location_id);
    EXPECT_EQ(a.test_statistic, b.test_statistic);
    EXPECT_EQ(a.log_likelihood_unrestricted, b.log_likelihood_unrestricted);
    EXPECT_EQ(a.log_likelihood_static, b.log_likelihood_static);
    EXPECT_EQ(a.t_star_index, b.t_star_index);
    EXPECT_EQ(a.t_star_date, b.t_star_date);
    EXPECT_EQ(a.expansion_area_m2, b.expansion_area_m2);
    EXPECT_EQ(a.footprint_before, b.footprint_before);
    EXPECT_EQ(a.footprint_added, b.footprint_added);
    EXPECT_EQ(a.null_percentile, b.null_percentile);
}

TEST(Rle, RoundTripAndLayout) {
    BinaryMap m{3, 2, {0, 0, 1, 1, 1, 0}};
    const auto runs = rle_encode(m);
    EXPECT_EQ(runs, (std::vector<std::int64_t>{0, 2, 1, 3, 0, 1}));
    EXPECT_EQ(rle_decode(3, 2, runs), m);
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const BinaryMap r = random_binary(1 + trial, 3, rng);
        EXPECT_EQ(rle_decode(r.width, r.height, rle_encode(r)), r);
    }
    EXPECT_THROW(rle_decode(3, 2, std::vector<std::int64_t>{0, 5}), InvalidArgument);
    EXPECT_THROW(rle_decode(3, 2, std::vector<std::int64_t>{2, 6}), InvalidArgument);
}

TEST(DetectionJson, RoundTrip) {
    Rng rng(2);
    DetectionReport r = sample_report("farm", 87.25, rng);
    expect_same(detection_from_json(detection_to_json(r)), r);
    r.null_percentile = 0.975;
    expect_same(detection_from_json(detection_to_json(r)), r);
    const ReportRecord rec = parse_report_line(detection_to_json(r));
    EXPECT_EQ(rec.method, "MLE");
    EXPECT_EQ(rec.score, 87.25);
    EXPECT_EQ(rec.area_m2, r.expansion_area_m2);
}

TEST(BaselineJson, RoundTrip) {
    BaselineResult r{"farm", std::string(kMethodBfastNdvi), 0.125, 17u, Date(2020, 2, 29)};
    const BaselineResult back = baseline_from_json(baseline_to_json(r));
    EXPECT_EQ(back.location_id, r.location_id);
    EXPECT_EQ(back.method, r.method);
    EXPECT_EQ(back.confidence, r.confidence);
    EXPECT_EQ(back.break_index, r.break_index);
    EXPECT_EQ(back.break_date, r.break_date);
    r.break_index.reset();
    r.break_date.reset();
    EXPECT_FALSE(baseline_from_json(baseline_to_json(r)).break_index.has_value());
}

TEST(ReportStream, MalformedLinesAreIoErrors) {
    test::TempDir dir;
    test::write_file(dir.path() / "r.jsonl", "{\"method\":\"MLE\",\"location_id\":\"a\",\"score\":1}\n\n{oops\n");
    EXPECT_THROW(read_report_stream(dir.path() / "r.jsonl"), IoError);
    test::write_file(dir.path() / "s.jsonl", "{\"method\":\"MLE\",\"score\":1}\n");
    EXPECT_THROW(read_report_stream(dir.path() / "s.jsonl"), IoError);
    EXPECT_THROW(read_report_stream(dir.path() / "missing.jsonl"), IoError);
}

TEST(ReportStream, MergeReplacesAndOrdersCanonically) {
    test::TempDir dir;
    const auto path = dir.path() / "reports.jsonl";
    const BaselineResult b1{"b", "BCP-NDVI", 0.5, {}, {}};
    const BaselineResult a1{"a", "BCP-NDVI", 0.25, {}, {}};
    const BaselineResult b2{"b", "BCP-NDVI", 0.75, {}, {}};
    const BaselineResult z1{"a", "BFAST-NDVI", 2.0, {}, {}};
    merge_report_stream(path, std::vector<std::string>{baseline_to_json(b1), baseline_to_json(a1)});
    merge_report_stream(path, std::vector<std::string>{baseline_to_json(z1)});
    merge_report_stream(path, std::vector<std::string>{baseline_to_json(b2)});
    const auto records = read_report_stream(path);
    ASSERT_EQ(records.size(), 3u);
    EXPECT_EQ(records[0].location_id, "a");
    EXPECT_EQ(records[0].method, "BCP-NDVI");
    EXPECT_EQ(records[1].location_id, "b");
    EXPECT_EQ(records[1].score, 0.75);
    EXPECT_EQ(records[2].method, "BFAST-NDVI");

    // Re-merging the same lines rewrites identical bytes.
    const std::string before = test::read_file(path);
    merge_report_stream(path, std::vector<std::string>{baseline_to_json(b2)});
    EXPECT_EQ(test::read_file(path), before);
}

TEST(RankingCsv, Layout) {
    test::TempDir dir;
    Rng rng(3);
    std::vector<DetectionReport> ranked{sample_report("x", 5.5, rng), sample_report("y", 1.0, rng)};
    ranked[0].null_percentile = 1.0;
    write_ranking_csv(dir.path() / "ranking.csv", ranked);
    const std::string text = test::read_file(dir.path() / "ranking.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "location_id,test_statistic,expansion_area_m2,null_percentile");
    EXPECT_NE(text.find("\nx,5.5,"), std::string::npos);
    EXPECT_NE(text.find(",1\ny,1,"), std::string::npos);
}

TEST(Labels, ParsesOptionalColumns) {
    test::TempDir dir;
    test::write_file(dir.path() / "labels.csv",
                     "expanded,location_id,true_area_m2\n1,a,1800\n0,b,\n\n");
    const auto rows = read_labels(dir.path() / "labels.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].location_id, "a");
    EXPECT_TRUE(rows[0].expanded);
    EXPECT_EQ(rows[0].true_area_m2, 1800.0);
    EXPECT_FALSE(rows[0].true_t_star.has_value());
    EXPECT_FALSE(rows[1].expanded);
    EXPECT_FALSE(rows[1].true_area_m2.has_value());

    test::write_file(dir.path() / "bad.csv", "location_id,expanded\na,yes\n");
    EXPECT_THROW(read_labels(dir.path() / "bad.csv"), IoError);
    test::write_file(dir.path() / "nohdr.csv", "id,label\na,1\n");
    EXPECT_THROW(read_labels(dir.path() / "nohdr.csv"), IoError);
}

}  // namespace
}  // namespace shedwatch
