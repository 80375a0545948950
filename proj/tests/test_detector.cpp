#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shedwatch/detector.hpp"
#include "shedwatch/errors.hpp"
#include "shedwatch/random.hpp"
#include "shedwatch/synthgen.hpp"

namespace shedwatch {
namespace {

FitConfig config_with_seed(std::uint64_t seed) {
    FitConfig c;
    c.seed = seed;
    return c;
}

SyntheticSpec small_spec(double noise, bool expanded) {
    SyntheticSpec s;
    s.location_id = expanded ? "grown" : "still";
    s.width = 40;
    s.height = 40;
    s.n_frames = 100;
    s.noise = noise;
    s.missing_rate = 0.0;
    s.base_sheds = {Rect{4, 4, 12, 24}};
    if (expanded) {
        s.added_shed = Rect{20, 8, 10, 20};
        s.true_t_star = 50;
    }
    s.seed = 77;
    return s;
}

ProbMapSeries constant_series(const std::vector<float>& map, int w, int h, int frames) {
    ProbMapSeries s;
    s.location_id = "const";
    for (int t = 0; t < frames; ++t) {
        ProbMap pm = ProbMap::filled(w, h, 0.0f, Date(2020, 1, 1) + 7 * t);
        pm.values = map;
        s.maps.push_back(pm);
    }
    return s;
}

double nesting_tolerance(double logl) { return 1e-6 * std::abs(logl); }

TEST(FitConfig, RejectsInvalidValues) {
    FitConfig c;
    c.momentum = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = FitConfig{};
    c.step_size = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = FitConfig{};
    c.alpha = -1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(FitUnrestricted, BinaryStaticSeriesRecoversTheMap) {
    Rng rng(1);
    std::vector<float> map(36);
    for (float& v : map) v = rng.bernoulli(0.4) ? 1.0f : 0.0f;
    const ProbMapSeries s = constant_series(map, 6, 6, 10);
    const FitResult fit = fit_unrestricted(s, config_with_seed(3));
    const BinaryMap before = threshold_map(6, 6, fit.model.f0);
    const BinaryMap added = threshold_map(6, 6, fit.model.fplus);
    EXPECT_EQ(added.count(), 0u);
    for (std::size_t i = 0; i < 36; ++i) {
        EXPECT_EQ(before.cells[i], map[i] > 0.5f ? 1 : 0);
    }
    EXPECT_LE(fit.log_likelihood, 0.0);
    EXPECT_LE(fit.iterations_used, FitConfig{}.max_iterations);
}

TEST(FitUnrestricted, NoiselessExpansionIsLocalised) {
    SyntheticSpec spec = small_spec(0.0, true);
    spec.transition_frames = 1;  // the block is fully present from frame 50
    const SyntheticLocation loc = generate_location(spec, false);
    const FitResult fit = fit_unrestricted(loc.probs, config_with_seed(5));
    const BinaryMap added = threshold_map(40, 40, fit.model.fplus);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 40; ++x) {
            EXPECT_EQ(added.cells[std::size_t(y * 40 + x)], spec.added_shed->contains(x, y) ? 1 : 0)
                << x << "," << y;
        }
    }
    EXPECT_LE(std::abs(fit.model.t_star - 50.0), 1.0);
}

TEST(FitUnrestricted, BeatsRandomParameterDraws) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ProbMapSeries s = oracle::random_series(3, 3, 4, seed, 0.0);
        const FitResult fit = fit_unrestricted(s, config_with_seed(seed));
        Rng rng(seed + 100);
        for (int draw = 0; draw < 50; ++draw) {
            FootprintModel m = FootprintModel::zeros(3, 3, rng.uniform(1.0, 4.0));
            for (std::size_t i = 0; i < 9; ++i) {
                m.f0[i] = rng.uniform();
                m.fplus[i] = rng.uniform();
            }
            EXPECT_GE(fit.log_likelihood, log_likelihood(m, s) - nesting_tolerance(fit.log_likelihood));
        }
        EXPECT_GE(fit.model.t_star, 1.0);
        EXPECT_LE(fit.model.t_star, 4.0);
    }
}

TEST(FitUnrestricted, IsDeterministic) {
    const ProbMapSeries s = generate_location(small_spec(0.15, true), false).probs;
    const FitResult a = fit_unrestricted(s, config_with_seed(9));
    const FitResult b = fit_unrestricted(s, config_with_seed(9));
    EXPECT_EQ(a.model.f0, b.model.f0);
    EXPECT_EQ(a.model.fplus, b.model.fplus);
    EXPECT_EQ(a.model.t_star, b.model.t_star);
    EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(FitStatic, ConstantSeriesGivesPerPixelMajority) {
    Rng rng(2);
    std::vector<float> map(25);
    for (float& v : map) {
        v = float(rng.uniform(0.05, 0.45) + (rng.bernoulli(0.5) ? 0.5 : 0.0));
    }
    const ProbMapSeries s = constant_series(map, 5, 5, 6);
    const FitResult fit = fit_static(s, config_with_seed(1));
    EXPECT_TRUE(fit.static_model);
    for (std::size_t i = 0; i < 25; ++i) {
        EXPECT_EQ(fit.model.fplus[i], 0.0);
        EXPECT_EQ(fit.model.f0[i] >= 0.5 ? 1 : 0, map[i] > 0.5f ? 1 : 0);
    }
}

TEST(FitStatic, MatchesPerPixelGridSearch) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ProbMapSeries s = oracle::random_series(2, 2, 3, 40 + seed, 0.0);
        const FitResult fit = fit_static(s, config_with_seed(seed));
        for (std::size_t i = 0; i < 4; ++i) {
            double best_value = -1e300;
            double best_f = 0.0;
            for (int k = 0; k <= 1000; ++k) {
                const double f = k / 1000.0;
                double v = 0.0;
                for (const ProbMap& pm : s.maps) {
                    const double p = pm.values[i];
                    v += std::log(std::max(1e-9, p * f + (1 - p) * (1 - f)));
                }
                if (v > best_value) {
                    best_value = v;
                    best_f = f;
                }
            }
            EXPECT_NEAR(fit.model.f0[i], best_f, 5e-3) << "seed " << seed << " pixel " << i;
        }
        EXPECT_LE(std::abs(log_likelihood(fit.model, s) - fit.log_likelihood), 1e-9);
    }
}

TEST(Nesting, StaticNeverBeatsUnrestricted) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ProbMapSeries s = oracle::random_series(4, 4, 8, 200 + seed);
        const FitConfig c = config_with_seed(seed);
        const FitResult u = fit_unrestricted(s, c);
        const FitResult st = fit_static(s, c);
        EXPECT_LE(st.log_likelihood, u.log_likelihood + nesting_tolerance(u.log_likelihood));
        EXPECT_GE(test_statistic(u, st), 0.0);
    }
}

TEST(TestStatistic, ArithmeticAndFloor) {
    FitResult u;
    FitResult s;
    u.location_id = s.location_id = "a";
    u.log_likelihood = s.log_likelihood = -42.0;
    EXPECT_EQ(test_statistic(u, s), 0.0);
    u.log_likelihood = -100.0;
    s.log_likelihood = -150.0;
    EXPECT_EQ(test_statistic(u, s), 50.0);
    u.log_likelihood = -150.0 - 1e-9;
    EXPECT_EQ(test_statistic(u, s), 0.0);
    s.location_id = "b";
    EXPECT_THROW(test_statistic(u, s), InvalidArgument);
}

TEST(Detect, StaticSceneHasNoExpansionArea) {
    const DetectionReport r = detect(generate_location(small_spec(0.15, false), false).probs,
                                     config_with_seed(4));
    EXPECT_EQ(r.expansion_area_m2, 0.0);
    EXPECT_EQ(r.footprint_added.count(), 0u);
    EXPECT_GE(r.test_statistic, 0.0);
}

TEST(Detect, ExpansionAreaMatchesAddedBlock) {
    const SyntheticSpec spec = small_spec(0.15, true);
    const SyntheticLocation loc = generate_location(spec, false);
    const DetectionReport r = detect(loc.probs, config_with_seed(4));
    EXPECT_NEAR(r.expansion_area_m2, 1800.0, 60.0);
    EXPECT_EQ(loc.truth.true_added_area_m2, 1800.0);
    EXPECT_NEAR(r.t_star_index, 50.0, 3.0);
    const long nearest = std::lround(r.t_star_index);
    EXPECT_EQ(r.t_star_date, loc.probs.maps[std::size_t(nearest - 1)].timestamp);
}

TEST(Detect, ExpansionScoresAboveStatic) {
    const FitConfig c = config_with_seed(8);
    const double ts_static = detect(generate_location(small_spec(0.15, false), false).probs, c).test_statistic;
    const double ts_grown = detect(generate_location(small_spec(0.15, true), false).probs, c).test_statistic;
    EXPECT_GT(ts_grown, ts_static);
}

TEST(Detect, AddingABlockRaisesTheStatistic) {
    // Paste a high-probability block into the second half of a static series.
    SyntheticSpec spec = small_spec(0.0, false);
    const ProbMapSeries base = generate_location(spec, false).probs;
    const FitConfig c = config_with_seed(2);
    const double ts_base = detect(base, c).test_statistic;
    for (int side : {5, 8}) {
        ProbMapSeries pasted = base;
        for (std::size_t t = pasted.size() / 2; t < pasted.size(); ++t) {
            for (int y = 25; y < 25 + side; ++y) {
                for (int x = 25; x < 25 + side; ++x) {
                    pasted.maps[t].values[std::size_t(y * 40 + x)] = 1.0f;
                }
            }
        }
        const DetectionReport r = detect(pasted, c);
        EXPECT_GT(r.test_statistic, ts_base + 1.0) << "side " << side;
    }
}

TEST(Detect, ReversedComplementedSeriesKeepsTheStatistic) {
    // Reversing time alone turns an added shed into a removed one, which the
    // union model cannot express. Reversing time and complementing every
    // probability maps the model onto itself (f0' = 1 - f0 - fplus,
    // fplus' = fplus, t*' = T + 1 - t*), so the statistic must be preserved.
    const ProbMapSeries s = generate_location(small_spec(0.0, true), false).probs;
    ProbMapSeries mirrored = s;
    const std::size_t frames = s.size();
    for (std::size_t t = 0; t < frames; ++t) {
        mirrored.maps[t].values = s.maps[frames - 1 - t].values;
        mirrored.maps[t].mask = s.maps[frames - 1 - t].mask;
        for (float& v : mirrored.maps[t].values) v = 1.0f - v;
    }
    const FitConfig c = config_with_seed(6);
    const DetectionReport a = detect(s, c);
    const DetectionReport b = detect(mirrored, c);
    EXPECT_NEAR(b.test_statistic, a.test_statistic, 0.01 * a.test_statistic);
    EXPECT_NEAR(b.t_star_index, double(frames) + 1.0 - a.t_star_index, 1.0);
}

TEST(NullDistribution, PercentileConvention) {
    EXPECT_DOUBLE_EQ(NullDistribution({5.0}).percentile(5.0), 1.0);
    EXPECT_DOUBLE_EQ(NullDistribution({1, 2, 3, 4}).percentile(2.5), 0.5);
    std::vector<double> ninety_nine;
    for (int i = 0; i < 99; ++i) ninety_nine.push_back(i * 0.5);
    EXPECT_DOUBLE_EQ(NullDistribution(ninety_nine).percentile(49.0), 1.0);
    EXPECT_DOUBLE_EQ(NullDistribution(ninety_nine).percentile(1000.0), 1.0);
    EXPECT_DOUBLE_EQ(NullDistribution(ninety_nine).percentile(-1.0), 0.0);
    EXPECT_THROW(NullDistribution({}), InvalidArgument);
}

TEST(NullDistribution, MatchesBruteForceRanks) {
    Rng rng(12);
    std::vector<DetectionReport> reports(200);
    for (auto& r : reports) {
        r.test_statistic = double(rng.uniform_int(0, 80));  // plenty of ties
    }
    const NullDistribution null = calibrate_null(reports);
    ASSERT_TRUE(std::is_sorted(null.values().begin(), null.values().end()));
    for (const auto& r : reports) {
        double below = 0;
        double equal = 0;
        for (const auto& o : reports) {
            below += o.test_statistic < r.test_statistic ? 1 : 0;
            equal += o.test_statistic == r.test_statistic ? 1 : 0;
        }
        const double want = (below + (equal + 1) / 2) / 200.0;
        EXPECT_DOUBLE_EQ(null.percentile(r.test_statistic), want);
    }
    EXPECT_THROW(calibrate_null(std::vector<DetectionReport>{}), InvalidArgument);
}

TEST(RankLocations, DescendingWithIdTieBreak) {
    std::vector<DetectionReport> reports(4);
    reports[0].location_id = "c";
    reports[0].test_statistic = 3;
    reports[1].location_id = "b";
    reports[1].test_statistic = 9;
    reports[2].location_id = "a";
    reports[2].test_statistic = 1;
    reports[3].location_id = "a2";
    reports[3].test_statistic = 3;
    const auto ranked = rank_locations(reports);
    std::vector<std::string> ids;
    for (const auto& r : ranked) ids.push_back(r.location_id);
    EXPECT_EQ(ids, (std::vector<std::string>{"b", "a2", "c", "a"}));
}

TEST(Detect, AttachesNullPercentile) {
    const ProbMapSeries s = generate_location(small_spec(0.15, true), false).probs;
    const NullDistribution null({0.0, 1.0, 2.0});
    const DetectionReport r = detect(s, config_with_seed(1), &null);
    ASSERT_TRUE(r.null_percentile.has_value());
    EXPECT_DOUBLE_EQ(*r.null_percentile, 1.0);
}

}  // namespace
}  // namespace shedwatch
