#include "shedwatch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "shedwatch/errors.hpp"

namespace shedwatch {

namespace {

// Sufficient statistics of one run (Welford form).
struct RunStats {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    RunStats with(double x) const {
        RunStats s = *this;
        s.n += 1.0;
        const double delta = x - s.mean;
        s.mean += delta / s.n;
        s.m2 += delta * (x - s.mean);
        return s;
    }
};

struct NigPrior {
    double mu0;
    double kappa0;
    double alpha0;
    double beta0;
};

// Student-t posterior predictive log density of x given a run's statistics.
double log_predictive(const NigPrior& p, const RunStats& s, double x) {
    const double kappa = p.kappa0 + s.n;
    const double mu = (p.kappa0 * p.mu0 + s.n * s.mean) / kappa;
    const double alpha = p.alpha0 + 0.5 * s.n;
    const double dm = s.mean - p.mu0;
    const double beta = p.beta0 + 0.5 * s.m2 + p.kappa0 * s.n * dm * dm / (2.0 * kappa);
    const double df = 2.0 * alpha;
    const double scale2 = beta * (kappa + 1.0) / (alpha * kappa);
    const double z = (x - mu) * (x - mu) / (df * scale2);
    return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
           0.5 * std::log(df * std::numbers::pi * scale2) - 0.5 * (df + 1.0) * std::log1p(z);
}

double log_sum_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) {
        return m;
    }
    double sum = 0.0;
    for (double x : v) {
        sum += std::exp(x - m);
    }
    return m + std::log(sum);
}

NigPrior resolve_prior(const ScalarSeries& series, const BocpdPrior& prior) {
    const auto& v = series.values;
    const double n = double(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    const double variance = ss / (n - 1.0);
    // A constant series has zero variance; keep the prior proper.
    const double floor = 1e-12 * (1.0 + mean * mean);
    NigPrior p{prior.mu0.value_or(mean), prior.kappa0, prior.alpha0,
               prior.beta0.value_or(std::max(variance, floor))};
    if (!std::isfinite(p.mu0) || !(p.kappa0 > 0.0) || !(p.alpha0 > 0.0) || !(p.beta0 > 0.0)) {
        throw InvalidArgument("Normal-Inverse-Gamma prior needs finite mu0 and positive kappa0, "
                              "alpha0, beta0");
    }
    return p;
}

struct LeastSquares {
    Eigen::VectorXd coef;
    double sse = 0.0;
};

LeastSquares fit_segment(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::Index begin,
                         Eigen::Index count) {
    const Eigen::MatrixXd xs = x.middleRows(begin, count);
    const Eigen::VectorXd ys = y.segment(begin, count);
    LeastSquares out;
    out.coef = xs.colPivHouseholderQr().solve(ys);
    out.sse = (ys - xs * out.coef).squaredNorm();
    return out;
}

}  // namespace

void ScalarSeries::validate() const {
    if (values.size() < kMinScalarLength) {
        throw InvalidArgument("scalar series needs at least 8 values");
    }
    if (timestamps.size() != values.size()) {
        throw InvalidArgument("scalar series values and timestamps differ in length");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw InvalidArgument("scalar series contains a non-finite value");
        }
        if (i > 0 && !(timestamps[i - 1] < timestamps[i])) {
            throw InvalidArgument("scalar series timestamps must strictly increase");
        }
    }
}

BocpdOutput bocpd_posterior(const ScalarSeries& series, const BocpdConfig& config,
                            std::string_view method) {
    series.validate();
    const std::size_t n = series.values.size();
    const double hazard = config.hazard.value_or(1.0 / double(n));
    if (!(hazard > 0.0 && hazard < 1.0)) {
        throw InvalidArgument("hazard must lie in (0, 1)");
    }
    const NigPrior prior = resolve_prior(series, config.prior);
    const double log_h = std::log(hazard);
    const double log_1mh = std::log1p(-hazard);

    BocpdOutput out;
    out.run_length_posterior.reserve(n);
    out.changepoint_probability.reserve(n);

    // log P(r_t = r | x_0..x_t), kept normalised.
    std::vector<double> log_post{0.0};
    std::vector<RunStats> stats{RunStats{}.with(series.values[0])};
    out.run_length_posterior.push_back({1.0});
    out.changepoint_probability.push_back(1.0);

    for (std::size_t t = 1; t < n; ++t) {
        const double x = series.values[t];
        std::vector<double> next(t + 1);
        next[0] = log_sum_exp(log_post) + log_h + log_predictive(prior, RunStats{}, x);
        for (std::size_t r = 1; r <= t; ++r) {
            next[r] = log_post[r - 1] + log_1mh + log_predictive(prior, stats[r - 1], x);
        }
        const double norm = log_sum_exp(next);
        if (!std::isfinite(norm)) {
            throw NumericError("run-length posterior underflowed");
        }
        std::vector<double> row(t + 1);
        for (std::size_t r = 0; r <= t; ++r) {
            next[r] -= norm;
            row[r] = std::exp(next[r]);
        }
        log_post = std::move(next);

        std::vector<RunStats> grown(t + 1);
        grown[0] = RunStats{}.with(x);
        for (std::size_t r = 1; r <= t; ++r) {
            grown[r] = stats[r - 1].with(x);
        }
        stats = std::move(grown);

        out.changepoint_probability.push_back(row[0]);
        out.run_length_posterior.push_back(std::move(row));
    }

    BaselineResult& result = out.result;
    result.location_id = series.location_id;
    result.method = std::string(method);
    std::size_t best = 1;
    for (std::size_t t = 2; t < n; ++t) {
        if (out.changepoint_probability[t] > out.changepoint_probability[best]) {
            best = t;
        }
    }
    result.confidence = std::clamp(out.changepoint_probability[best], 0.0, 1.0);
    result.break_index = best;
    result.break_date = series.timestamps[best];
    return out;
}

BaselineResult bocpd(const ScalarSeries& series, const BocpdConfig& config,
                     std::string_view method) {
    return bocpd_posterior(series, config, method).result;
}

std::vector<double> trend_regressors(const Date& origin, const Date& date, int harmonics) {
    const double years = double(date - origin) / 365.25;
    std::vector<double> row{1.0, years};
    for (int k = 1; k <= harmonics; ++k) {
        const double phase = 2.0 * std::numbers::pi * double(k) * years;
        row.push_back(std::cos(phase));
        row.push_back(std::sin(phase));
    }
    return row;
}

BaselineResult trend_break(const ScalarSeries& series, const TrendBreakConfig& config,
                           std::string_view method) {
    series.validate();
    if (config.harmonics < 0) {
        throw InvalidArgument("number of harmonics must be non-negative");
    }
    const auto n = Eigen::Index(series.values.size());
    const Eigen::Index p = 2 + 2 * config.harmonics;
    if (n < 2 * p + 2) {
        throw InvalidArgument("scalar series too short for the season-trend parameter count");
    }

    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    const Date origin = series.timestamps.front();
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::vector<double> row =
            trend_regressors(origin, series.timestamps[std::size_t(i)], config.harmonics);
        for (Eigen::Index j = 0; j < p; ++j) {
            x(i, j) = row[std::size_t(j)];
        }
        y(i) = series.values[std::size_t(i)];
    }

    const LeastSquares whole = fit_segment(x, y, 0, n);
    Eigen::Index best_b = -1;
    LeastSquares best_left;
    LeastSquares best_right;
    double best_sse = std::numeric_limits<double>::infinity();
    for (Eigen::Index b = p + 1; b <= n - p - 1; ++b) {
        LeastSquares left = fit_segment(x, y, 0, b);
        LeastSquares right = fit_segment(x, y, b, n - b);
        const double sse = left.sse + right.sse;
        if (sse < best_sse) {
            best_sse = sse;
            best_b = b;
            best_left = std::move(left);
            best_right = std::move(right);
        }
    }

    // Exact fits leave rounding-level residuals; floor them relative to the
    // total variation so that BIC compares models, not round-off.
    const double tss = (y.array() - y.mean()).square().sum();
    const double floor = std::max(1e-14 * tss, std::numeric_limits<double>::min());
    const double dn = double(n);
    const double bic_none = dn * std::log(std::max(whole.sse, floor) / dn) + double(p) * std::log(dn);
    const double bic_break =
        dn * std::log(std::max(best_sse, floor) / dn) + double(2 * p + 1) * std::log(dn);

    BaselineResult result;
    result.location_id = series.location_id;
    result.method = std::string(method);
    if (!(bic_break < bic_none)) {
        return result;
    }
    const Eigen::RowVectorXd at_break = x.row(best_b);
    result.confidence = std::abs(at_break.dot(best_right.coef) - at_break.dot(best_left.coef));
    result.break_index = std::size_t(best_b);
    result.break_date = series.timestamps[std::size_t(best_b)];
    return result;
}

ScalarSeries series_from_probmaps(const ProbMapSeries& series, double threshold) {
    series.validate();
    ScalarSeries out;
    out.location_id = series.location_id;
    for (const ProbMap& pm : series.maps) {
        out.values.push_back(double(cafo_pixel_count(pm, threshold)));
        out.timestamps.push_back(pm.timestamp);
    }
    return out;
}

ScalarSeries series_from_scenes(const SceneSeries& series) {
    series.validate();
    ScalarSeries out;
    out.location_id = series.location_id;
    for (const Frame& f : series.frames) {
        out.values.push_back(mean_ndvi(f));
        out.timestamps.push_back(f.timestamp);
    }
    return out;
}

}  // namespace shedwatch
