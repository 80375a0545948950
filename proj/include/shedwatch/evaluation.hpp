#pragma once

// Detection metrics over labelled location scores and the random-inspection
// cost model used to judge rankings.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shedwatch {

struct LabeledScore {
    std::string location_id;
    double score = 0.0;
    bool label = false;  // true = expansion
    std::optional<double> size;
};

struct RocPoint {
    double threshold = 0.0;  // predict positive when score >= threshold
    double fpr = 0.0;
    double tpr = 0.0;
};

struct ThresholdMetric {
    double threshold = 0.0;  // predict positive when score > threshold
    double value = 0.0;
};

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

struct ScoreSeparation {
    double mean_positive = 0.0;
    double mean_negative = 0.0;
    double ratio = 0.0;      // mean_positive / mean_negative (infinite if the latter is 0)
    double p_value = 1.0;    // one-sided permutation test of the mean difference
};

struct EvalReport {
    std::string method;
    std::size_t n_locations = 0;
    std::size_t n_positive = 0;
    std::vector<RocPoint> roc_points;
    double auc = 0.0;
    ThresholdMetric best_balanced_accuracy;
    ThresholdMetric best_f1;
    std::optional<Correlation> size_correlation;
    ScoreSeparation separation;
    std::vector<std::size_t> cost_curve;
    double expected_random_false_positives = 0.0;
    double cost_reduction = 0.0;  // 1 - curve.back() / expected_random_false_positives
};

inline constexpr int kDefaultPermutations = 10000;

// ROC starting at (0, 0) and ending at (1, 1) with one step per distinct
// score; equal scores move both rates at once. Throws on single-class input.
std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores);

// Trapezoidal area under roc_curve.
double roc_auc(std::span<const LabeledScore> scores);

// Candidate thresholds: -inf, midpoints between adjacent distinct scores,
// +inf. The lowest threshold achieving the maximum is reported.
ThresholdMetric best_balanced_accuracy(std::span<const LabeledScore> scores);
ThresholdMetric best_f1(std::span<const LabeledScore> scores);

// Pearson r with a two-sided permutation p-value, (count + 1) / (perms + 1).
// Throws on fewer than 3 points or zero variance in either coordinate.
Correlation pearson_permutation(std::span<const double> x, std::span<const double> y,
                                int permutations = kDefaultPermutations,
                                std::uint64_t seed = 0);

// Pearson correlation between score and size over the positive records that
// carry a size.
Correlation size_correlation(std::span<const LabeledScore> scores,
                             int permutations = kDefaultPermutations, std::uint64_t seed = 0);

ScoreSeparation score_separation(std::span<const LabeledScore> scores,
                                 int permutations = kDefaultPermutations, std::uint64_t seed = 0);

// Expected number of inspections, in uniformly random order without
// replacement, until n of the M expansions among N locations are found:
// n (N + 1) / (M + 1).
double expected_random_cost(std::size_t total, std::size_t expansions, std::size_t found);

// expected_random_cost - found.
double expected_false_positives(std::size_t total, std::size_t expansions, std::size_t found);

// Mean inspections until `found` expansions, over `trials` seeded shuffles.
double monte_carlo_random_cost(std::size_t total, std::size_t expansions, std::size_t found,
                               std::size_t trials, std::uint64_t seed);

// For the k-th true label in rank order, the number of false labels before it.
std::vector<std::size_t> cost_curve(const std::vector<bool>& ranked_labels);

// Labels ordered by descending score, ties by ascending location_id.
std::vector<bool> ranked_labels(std::span<const LabeledScore> scores);

EvalReport evaluate_method(const std::string& method, std::span<const LabeledScore> scores,
                           int permutations = kDefaultPermutations, std::uint64_t seed = 0);

}  // namespace shedwatch
