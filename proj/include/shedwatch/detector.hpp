#pragma once

// Maximum-likelihood expansion detector.
//
// Two fits per location: the unrestricted model (f0, fplus, t_star) and the
// static model with fplus pinned to zero. The test statistic is the gain in
// log-likelihood of the first over the second; larger values mean the
// series is better explained by an added footprint.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shedwatch/date.hpp"
#include "shedwatch/footprint_model.hpp"
#include "shedwatch/spectral.hpp"

namespace shedwatch {

struct FitConfig {
    int max_iterations = 500;
    double step_size = 0.05;
    double momentum = 0.9;
    double convergence_tol = 1e-6;  // relative change of the objective
    double alpha = kDefaultAlpha;
    int restarts = 3;
    std::uint64_t seed = 0;
    double sparsity = 0.0;  // lambda in the optional -lambda * sum(fplus) penalty

    void validate() const;
};

struct FitResult {
    std::string location_id;
    FootprintModel model;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations_used = 0;
    int restart_index = 0;
    bool static_model = false;  // t_star carries no information when set
};

struct BinaryMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> cells;  // row-major, 0/1

    std::size_t count() const;
    friend bool operator==(const BinaryMap&, const BinaryMap&) = default;
};

struct DetectionReport {
    std::string location_id;
    double test_statistic = 0.0;
    double log_likelihood_unrestricted = 0.0;
    double log_likelihood_static = 0.0;
    double t_star_index = 0.0;  // real-valued, 1-based frame units
    Date t_star_date;           // timestamp of the nearest frame
    double expansion_area_m2 = 0.0;
    BinaryMap footprint_before;
    BinaryMap footprint_added;
    std::optional<double> null_percentile;
};

// Empirical distribution of test statistics from presumed-static locations.
class NullDistribution {
public:
    explicit NullDistribution(std::vector<double> values);

    // rank / n, where a query equal to k tied members takes the midpoint of
    // their ranks. A query above every member scores 1.
    double percentile(double test_statistic) const;

    const std::vector<double>& values() const { return sorted_; }
    std::size_t size() const { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

// Best of `restarts` momentum gradient-ascent runs from spread t_star
// initialisations. The static optimum (fplus = 0) is also a candidate, so
// the result never falls below the nested static fit; restart_index equals
// `restarts` when it wins. Deterministic given seed.
FitResult fit_unrestricted(const ProbMapSeries& series, const FitConfig& config);

// Same objective with fplus fixed at zero; optimises f0 only.
FitResult fit_static(const ProbMapSeries& series, const FitConfig& config);

// logL_unrestricted - logL_static, floored at zero.
double test_statistic(const FitResult& unrestricted, const FitResult& static_fit);

DetectionReport detect(const ProbMapSeries& series, const FitConfig& config,
                       const NullDistribution* null = nullptr);

NullDistribution calibrate_null(std::span<const DetectionReport> reports);

// Descending test statistic; ties by ascending location_id.
std::vector<DetectionReport> rank_locations(std::vector<DetectionReport> reports);

BinaryMap threshold_map(int width, int height, const std::vector<double>& values,
                        double threshold = 0.5);

}  // namespace shedwatch
