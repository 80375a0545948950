#pragma once

// Comparison methods on scalar per-frame series: Bayesian online changepoint
// detection (BCP) and a single-break season-trend regression (BFAST-style).

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shedwatch/date.hpp"
#include "shedwatch/scene_store.hpp"
#include "shedwatch/spectral.hpp"

namespace shedwatch {

inline constexpr std::string_view kMethodMle = "MLE";
inline constexpr std::string_view kMethodBcpNdvi = "BCP-NDVI";
inline constexpr std::string_view kMethodBcpPixels = "BCP-PIXELCOUNT";
inline constexpr std::string_view kMethodBfastNdvi = "BFAST-NDVI";

inline constexpr std::size_t kMinScalarLength = 8;

struct ScalarSeries {
    std::string location_id;
    std::vector<double> values;
    std::vector<Date> timestamps;

    // Length >= 8, matching timestamps that strictly increase, finite values.
    void validate() const;
};

struct BaselineResult {
    std::string location_id;
    std::string method;
    double confidence = 0.0;  // posterior probability (BCP) or break magnitude (BFAST)
    std::optional<std::size_t> break_index;  // 0-based index of the first post-break frame
    std::optional<Date> break_date;
};

struct BocpdPrior {
    // Unset fields default to the sample mean and the sample variance.
    std::optional<double> mu0;
    double kappa0 = 0.1;  // the prior mean counts as a tenth of an observation
    double alpha0 = 1.0;
    std::optional<double> beta0;
};

struct BocpdConfig {
    std::optional<double> hazard;  // default 1 / T
    BocpdPrior prior;
};

struct BocpdOutput {
    BaselineResult result;
    // posterior[t][r] = P(run length r | x_0..x_t), r = 0..t; rows sum to 1.
    std::vector<std::vector<double>> run_length_posterior;
    // P(changepoint at t | x_0..x_t) = posterior[t][0].
    std::vector<double> changepoint_probability;
};

// Gaussian observations with a Normal-Inverse-Gamma conjugate prior and a
// constant hazard. A run of length 0 at t means x_t opens a new segment and
// is scored under the prior predictive. Confidence is the largest
// changepoint probability over t >= 1; break_index is its first argmax.
BocpdOutput bocpd_posterior(const ScalarSeries& series, const BocpdConfig& config = {},
                            std::string_view method = kMethodBcpNdvi);

BaselineResult bocpd(const ScalarSeries& series, const BocpdConfig& config = {},
                     std::string_view method = kMethodBcpNdvi);

struct TrendBreakConfig {
    int harmonics = 2;
};

// Regressors for one observation: intercept, years since the series start,
// then cos/sin pairs of the annual cycle.
std::vector<double> trend_regressors(const Date& origin, const Date& date, int harmonics);

// Least-squares single break: every b whose two segments [0, b) and [b, T)
// each hold more points than there are regressors is tried and the b with
// the smallest total squared error kept. Confidence is |right(b) - left(b)|,
// the jump between the two segment fits at frame b. When the no-break fit
// has the lower BIC, confidence is 0 and no break is reported.
BaselineResult trend_break(const ScalarSeries& series, const TrendBreakConfig& config = {},
                           std::string_view method = kMethodBfastNdvi);

// Per-frame count of pixels with probability >= threshold.
ScalarSeries series_from_probmaps(const ProbMapSeries& series,
                                  double threshold = kDefaultPixelThreshold);

// Per-frame mean NDVI over the unmasked pixels.
ScalarSeries series_from_scenes(const SceneSeries& series);

}  // namespace shedwatch
