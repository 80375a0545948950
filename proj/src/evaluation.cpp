#include "shedwatch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "shedwatch/errors.hpp"
#include "shedwatch/random.hpp"

namespace shedwatch {

namespace {

struct ClassCounts {
    std::size_t positive = 0;
    std::size_t negative = 0;
};

ClassCounts count_classes(std::span<const LabeledScore> scores) {
    ClassCounts c;
    for (const LabeledScore& s : scores) {
        if (!std::isfinite(s.score)) {
            throw InvalidArgument("score for " + s.location_id + " is not finite");
        }
        (s.label ? c.positive : c.negative) += 1;
    }
    return c;
}

ClassCounts require_both_classes(std::span<const LabeledScore> scores) {
    const ClassCounts c = count_classes(scores);
    if (c.positive == 0 || c.negative == 0) {
        throw InvalidArgument("metric needs both positive and negative labels");
    }
    return c;
}

// Scores sorted ascending, grouped into distinct values with the class
// counts of each group.
struct ScoreGroup {
    double score;
    std::size_t positive;
    std::size_t negative;
};

std::vector<ScoreGroup> ascending_groups(std::span<const LabeledScore> scores) {
    std::vector<std::pair<double, bool>> sorted;
    sorted.reserve(scores.size());
    for (const LabeledScore& s : scores) {
        sorted.emplace_back(s.score, s.label);
    }
    std::sort(sorted.begin(), sorted.end());
    std::vector<ScoreGroup> groups;
    for (const auto& [score, label] : sorted) {
        if (groups.empty() || groups.back().score != score) {
            groups.push_back({score, 0, 0});
        }
        (label ? groups.back().positive : groups.back().negative) += 1;
    }
    return groups;
}

// Sweeps the candidate thresholds in ascending order, calling
// metric(tp, fp, fn, tn) for each and keeping the first maximum.
template <typename Metric>
ThresholdMetric sweep_thresholds(std::span<const LabeledScore> scores, const ClassCounts& c,
                                 Metric metric) {
    const std::vector<ScoreGroup> groups = ascending_groups(scores);
    // Threshold -inf: everything predicted positive.
    std::size_t tp = c.positive;
    std::size_t fp = c.negative;
    ThresholdMetric best{-std::numeric_limits<double>::infinity(),
                         metric(tp, fp, std::size_t{0}, std::size_t{0})};
    for (std::size_t g = 0; g < groups.size(); ++g) {
        tp -= groups[g].positive;
        fp -= groups[g].negative;
        const double threshold = g + 1 < groups.size()
                                     ? 0.5 * (groups[g].score + groups[g + 1].score)
                                     : std::numeric_limits<double>::infinity();
        const double value = metric(tp, fp, c.positive - tp, c.negative - fp);
        if (value > best.value) {
            best = {threshold, value};
        }
    }
    return best;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = std::size_t(rng.uniform_int(0, std::int64_t(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

// Relative slack so that permutations reproducing the observed statistic
// up to rounding count as "at least as extreme".
constexpr double kPermutationSlack = 1e-12;

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores) {
    const ClassCounts c = require_both_classes(scores);
    std::vector<ScoreGroup> groups = ascending_groups(scores);
    std::vector<RocPoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
        tp += it->positive;
        fp += it->negative;
        points.push_back({it->score, double(fp) / double(c.negative), double(tp) / double(c.positive)});
    }
    return points;
}

double roc_auc(std::span<const LabeledScore> scores) {
    const std::vector<RocPoint> points = roc_curve(scores);
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * 0.5 * (points[i].tpr + points[i - 1].tpr);
    }
    return std::clamp(area, 0.0, 1.0);
}

ThresholdMetric best_balanced_accuracy(std::span<const LabeledScore> scores) {
    const ClassCounts c = require_both_classes(scores);
    return sweep_thresholds(scores, c, [&c](std::size_t tp, std::size_t, std::size_t, std::size_t tn) {
        return 0.5 * (double(tp) / double(c.positive) + double(tn) / double(c.negative));
    });
}

ThresholdMetric best_f1(std::span<const LabeledScore> scores) {
    const ClassCounts c = count_classes(scores);
    if (c.positive == 0) {
        throw InvalidArgument("F1 needs at least one positive label");
    }
    return sweep_thresholds(scores, c, [](std::size_t tp, std::size_t fp, std::size_t fn, std::size_t) {
        return tp == 0 ? 0.0 : 2.0 * double(tp) / double(2 * tp + fp + fn);
    });
}

Correlation pearson_permutation(std::span<const double> x, std::span<const double> y,
                                int permutations, std::uint64_t seed) {
    if (x.size() != y.size()) {
        throw InvalidArgument("correlation inputs differ in length");
    }
    if (x.size() < 3) {
        throw InvalidArgument("correlation needs at least 3 points");
    }
    if (permutations < 1) {
        throw InvalidArgument("permutation count must be positive");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw InvalidArgument("correlation inputs must be finite");
        }
    }
    auto degenerate = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&v](double a) { return a == v.front(); });
    };
    if (degenerate(x) || degenerate(y)) {
        throw InvalidArgument("correlation undefined: zero variance");
    }
    Correlation out;
    out.n = x.size();
    out.r = std::clamp(pearson(x, y), -1.0, 1.0);
    const double cutoff = std::abs(out.r) * (1.0 - kPermutationSlack);
    Rng rng(seed);
    std::vector<double> shuffled(y.begin(), y.end());
    int extreme = 0;
    for (int k = 0; k < permutations; ++k) {
        shuffle(shuffled, rng);
        if (std::abs(pearson(x, shuffled)) >= cutoff) {
            ++extreme;
        }
    }
    out.p_value = double(extreme + 1) / double(permutations + 1);
    return out;
}

Correlation size_correlation(std::span<const LabeledScore> scores, int permutations,
                             std::uint64_t seed) {
    std::vector<double> x;
    std::vector<double> y;
    for (const LabeledScore& s : scores) {
        if (s.label && s.size) {
            x.push_back(s.score);
            y.push_back(*s.size);
        }
    }
    return pearson_permutation(x, y, permutations, seed);
}

ScoreSeparation score_separation(std::span<const LabeledScore> scores, int permutations,
                                 std::uint64_t seed) {
    const ClassCounts c = require_both_classes(scores);
    if (permutations < 1) {
        throw InvalidArgument("permutation count must be positive");
    }
    std::vector<double> values;
    std::vector<bool> labels;
    for (const LabeledScore& s : scores) {
        values.push_back(s.score);
        labels.push_back(s.label);
    }
    auto difference = [&](const std::vector<bool>& l, double* pos, double* neg) {
        double sp = 0.0;
        double sn = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            (l[i] ? sp : sn) += values[i];
        }
        *pos = sp / double(c.positive);
        *neg = sn / double(c.negative);
        return *pos - *neg;
    };
    ScoreSeparation out;
    const double observed = difference(labels, &out.mean_positive, &out.mean_negative);
    out.ratio = out.mean_negative != 0.0 ? out.mean_positive / out.mean_negative
                                         : std::numeric_limits<double>::infinity();
    const double cutoff = observed - kPermutationSlack * std::abs(observed);
    Rng rng(seed);
    std::vector<bool> shuffled = labels;
    int extreme = 0;
    for (int k = 0; k < permutations; ++k) {
        shuffle(shuffled, rng);
        double pos = 0.0;
        double neg = 0.0;
        if (difference(shuffled, &pos, &neg) >= cutoff) {
            ++extreme;
        }
    }
    out.p_value = double(extreme + 1) / double(permutations + 1);
    return out;
}

double expected_random_cost(std::size_t total, std::size_t expansions, std::size_t found) {
    if (!(found > 0 && found <= expansions && expansions < total)) {
        throw InvalidArgument("expected cost needs 0 < n <= M < N");
    }
    return double(found) * double(total + 1) / double(expansions + 1);
}

double expected_false_positives(std::size_t total, std::size_t expansions, std::size_t found) {
    return expected_random_cost(total, expansions, found) - double(found);
}

double monte_carlo_random_cost(std::size_t total, std::size_t expansions, std::size_t found,
                               std::size_t trials, std::uint64_t seed) {
    if (!(found > 0 && found <= expansions && expansions < total) || trials == 0) {
        throw InvalidArgument("Monte Carlo cost needs 0 < n <= M < N and trials > 0");
    }
    Rng rng(seed);
    double sum = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
        // Draw locations one by one without replacement until `found`
        // expansions have turned up.
        std::size_t remaining = total;
        std::size_t positives = expansions;
        std::size_t hits = 0;
        std::size_t draws = 0;
        while (hits < found) {
            const auto pick = std::size_t(rng.uniform_int(0, std::int64_t(remaining) - 1));
            if (pick < positives) {
                --positives;
                ++hits;
            }
            --remaining;
            ++draws;
        }
        sum += double(draws);
    }
    return sum / double(trials);
}

std::vector<std::size_t> cost_curve(const std::vector<bool>& ranked) {
    std::vector<std::size_t> curve;
    std::size_t negatives = 0;
    for (bool label : ranked) {
        if (label) {
            curve.push_back(negatives);
        } else {
            ++negatives;
        }
    }
    return curve;
}

std::vector<bool> ranked_labels(std::span<const LabeledScore> scores) {
    std::vector<const LabeledScore*> order;
    for (const LabeledScore& s : scores) {
        order.push_back(&s);
    }
    std::stable_sort(order.begin(), order.end(), [](const LabeledScore* a, const LabeledScore* b) {
        if (a->score != b->score) {
            return a->score > b->score;
        }
        return a->location_id < b->location_id;
    });
    std::vector<bool> labels;
    for (const LabeledScore* s : order) {
        labels.push_back(s->label);
    }
    return labels;
}

EvalReport evaluate_method(const std::string& method, std::span<const LabeledScore> scores,
                           int permutations, std::uint64_t seed) {
    const ClassCounts c = require_both_classes(scores);
    EvalReport report;
    report.method = method;
    report.n_locations = scores.size();
    report.n_positive = c.positive;
    report.roc_points = roc_curve(scores);
    report.auc = roc_auc(scores);
    report.best_balanced_accuracy = best_balanced_accuracy(scores);
    report.best_f1 = best_f1(scores);
    try {
        report.size_correlation = size_correlation(scores, permutations, seed);
    } catch (const InvalidArgument&) {
        report.size_correlation.reset();  // too few sized positives or no variance
    }
    report.separation = score_separation(scores, permutations, seed);
    const std::vector<bool> ranked = ranked_labels(scores);
    report.cost_curve = cost_curve(ranked);
    report.expected_random_false_positives =
        expected_false_positives(scores.size(), c.positive, c.positive);
    report.cost_reduction =
        report.expected_random_false_positives > 0.0
            ? 1.0 - double(report.cost_curve.back()) / report.expected_random_false_positives
            : 0.0;
    return report;
}

}  // namespace shedwatch
