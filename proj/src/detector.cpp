#include "shedwatch/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "shedwatch/errors.hpp"
#include "shedwatch/random.hpp"

namespace shedwatch {

namespace {

// The likelihood separates over pixels once t_star is fixed. A pixel whose
// observed probabilities all sit on one side of 0.5 is maximised term by
// term by a constant Z (0 or 1), in both the static and the unrestricted
// model, so it is solved in closed form and only "active" pixels are
// optimised numerically. Per-frame terms are stored as log(a + b Z) with
// a = 1 - p and b = 2p - 1; masked frames use a = 1, b = 0.
class PixelProblem {
public:
    explicit PixelProblem(const ProbMapSeries& series) {
        frames_ = series.maps.size();
        width_ = series.width();
        height_ = series.height();
        const std::size_t npix = std::size_t(width_) * std::size_t(height_);
        fixed_f0_.assign(npix, 0.0);
        std::vector<double> a(frames_);
        std::vector<double> b(frames_);
        for (std::size_t i = 0; i < npix; ++i) {
            bool below = false;
            bool above = false;
            int observed = 0;
            for (std::size_t t = 0; t < frames_; ++t) {
                const ProbMap& pm = series.maps[t];
                if (pm.mask[i] != 0) {
                    a[t] = 1.0;
                    b[t] = 0.0;
                    continue;
                }
                const double p = pm.values[i];
                below = below || p < 0.5;
                above = above || p > 0.5;
                a[t] = 1.0 - p;
                b[t] = 2.0 * p - 1.0;
                ++observed;
            }
            if (below && above) {
                active_.push_back(i);
                observed_.push_back(observed);
                a_.insert(a_.end(), a.begin(), a.end());
                b_.insert(b_.end(), b.begin(), b.end());
                continue;
            }
            const double z = above ? 1.0 : 0.0;
            fixed_f0_[i] = z;
            double sum = 0.0;
            for (std::size_t t = 0; t < frames_; ++t) {
                sum += log_term(a[t] + b[t] * z);
            }
            fixed_loglik_ += sum;
        }
    }

    std::size_t frames() const { return frames_; }
    std::size_t active_count() const { return active_.size(); }
    const std::vector<std::size_t>& active() const { return active_; }
    int observed(std::size_t j) const { return observed_[j]; }
    double fixed_loglik() const { return fixed_loglik_; }
    const std::vector<double>& fixed_f0() const { return fixed_f0_; }
    int width() const { return width_; }
    int height() const { return height_; }

    // Mean observed probability of active pixel j over frames [lo, hi).
    double mean_probability(std::size_t j, std::size_t lo, std::size_t hi) const {
        double sum = 0.0;
        int count = 0;
        const double* a = a_.data() + j * frames_;
        const double* b = b_.data() + j * frames_;
        for (std::size_t t = lo; t < hi; ++t) {
            if (b[t] == 0.0 && a[t] == 1.0) {
                continue;  // masked (p == 0 is stored as a = 1, b = -1)
            }
            sum += 1.0 - a[t];
            ++count;
        }
        return count > 0 ? sum / count : 0.0;
    }

    // Gradients plus Gauss-Newton curvatures (sums of squared per-term
    // derivatives), used to precondition the ascent.
    struct Gradients {
        std::vector<double> f0;
        std::vector<double> fplus;
        std::vector<double> h_f0;
        std::vector<double> h_fplus;
        double t_star = 0.0;
        double h_t_star = 0.0;
    };

    // Log-likelihood of the active pixels; fills gradients when requested.
    // s[t] and ds[t] hold the transition S and dS/dt_star at frame t.
    double evaluate(const std::vector<double>& f0, const std::vector<double>& fplus,
                    const std::vector<double>& s, const std::vector<double>& ds,
                    Gradients* g) const {
        double total = 0.0;
        double gt = 0.0;
        double ht = 0.0;
        for (std::size_t j = 0; j < active_.size(); ++j) {
            const double* a = a_.data() + j * frames_;
            const double* b = b_.data() + j * frames_;
            const double base = f0[j];
            const double added = fplus[j];
            double ll = 0.0;
            double d0 = 0.0;
            double dp = 0.0;
            double dt = 0.0;
            double h0 = 0.0;
            double hp = 0.0;
            double hdt = 0.0;
            for (std::size_t t = 0; t < frames_; ++t) {
                double z = base + added * s[t];
                bool saturated = false;
                if (z > 1.0) {
                    z = 1.0;
                    saturated = true;
                }
                const double arg = a[t] + b[t] * z;
                if (arg < kLogFloor) {
                    ll += kLogOfFloor;
                    continue;
                }
                ll += std::log(arg);
                if (!saturated) {
                    const double d = b[t] / arg;
                    const double d2 = d * d;
                    d0 += d;
                    dp += d * s[t];
                    dt += d * ds[t];
                    h0 += d2;
                    hp += d2 * s[t] * s[t];
                    hdt += d2 * ds[t] * ds[t];
                }
            }
            total += ll;
            if (g != nullptr) {
                g->f0[j] = d0;
                g->fplus[j] = dp;
                g->h_f0[j] = h0;
                g->h_fplus[j] = hp;
                gt += added * dt;
                ht += added * added * hdt;
            }
        }
        if (g != nullptr) {
            g->t_star = gt;
            g->h_t_star = ht;
        }
        return total;
    }

private:
    static inline const double kLogOfFloor = std::log(kLogFloor);

    static double log_term(double arg) {
        return arg < kLogFloor ? kLogOfFloor : std::log(std::min(arg, 1.0));
    }

    std::size_t frames_ = 0;
    int width_ = 0;
    int height_ = 0;
    std::vector<std::size_t> active_;
    std::vector<int> observed_;
    std::vector<double> a_;
    std::vector<double> b_;
    std::vector<double> fixed_f0_;
    double fixed_loglik_ = 0.0;
};

struct RunState {
    std::vector<double> f0;
    std::vector<double> fplus;
    double t_star = 1.0;
};

struct RunOutcome {
    RunState best;
    double objective = -std::numeric_limits<double>::infinity();
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
};

void fill_transition(std::size_t frames, double t_star, double alpha, std::vector<double>& s,
                     std::vector<double>& ds) {
    for (std::size_t t = 0; t < frames; ++t) {
        s[t] = 1.0 / (1.0 + std::exp(-(double(t + 1) - t_star) / alpha));
        ds[t] = -s[t] * (1.0 - s[t]) / alpha;
    }
}

// Active pixels are fitted inside kMargin <= f0, 0 <= fplus,
// f0 + fplus <= 1 - kMargin. Z then stays strictly inside (0, 1): it never
// saturates and no observed 0 or 1 probability lands on the log floor, where
// the gradient vanishes and a projected iterate would stall.
constexpr double kMargin = 1e-6;

struct Point {
    double f0;
    double fplus;
};

// Projection of y onto the feasible triangle in the metric whose
// per-coordinate weights are the step rates w0, wp (the same diagonal
// scaling as the ascent step), so the fixed points of the projected ascent
// are exactly the constrained stationary points. Enumerates the edges and
// vertices and keeps the nearest feasible candidate.
Point project_feasible(Point y, double w0, double wp) {
    const double lo = kMargin;
    const double cap = 1.0 - kMargin;
    auto feasible = [&](const Point& x) {
        const double slack = 1e-15;
        return x.f0 >= lo - slack && x.fplus >= -slack && x.f0 + x.fplus <= cap + slack;
    };
    if (feasible(y)) {
        return y;
    }
    auto distance = [&](const Point& x) {
        const double d0 = x.f0 - y.f0;
        const double dp = x.fplus - y.fplus;
        return d0 * d0 / w0 + dp * dp / wp;
    };
    const double lambda = (y.f0 + y.fplus - cap) / (w0 + wp);
    const Point candidates[] = {
        {lo, y.fplus},
        {y.f0, 0.0},
        {y.f0 - lambda * w0, y.fplus - lambda * wp},
        {lo, 0.0},
        {lo, cap - lo},
        {cap, 0.0},
    };
    Point best{lo, 0.0};
    double best_distance = std::numeric_limits<double>::infinity();
    for (const Point& c : candidates) {
        if (feasible(c) && distance(c) < best_distance) {
            best = c;
            best_distance = distance(c);
        }
    }
    best.f0 = std::clamp(best.f0, lo, cap);
    best.fplus = std::clamp(best.fplus, 0.0, cap - best.f0);
    return best;
}

// Projected momentum ascent over that set for the footprint entries and over
// [1, T] for t_star. Every coordinate's gradient is divided by its
// Gauss-Newton curvature (floored at one), so a single fixed step size
// serves pixels with very different noise levels as well as t_star. The
// best iterate seen is returned.
RunOutcome ascend(const PixelProblem& problem, const FitConfig& config, RunState state,
                  bool with_transition) {
    const std::size_t n = problem.active_count();
    const std::size_t frames = problem.frames();
    const double t_max = double(frames);
    const double max_t_velocity = std::max(1.0, config.alpha);

    std::vector<double> s(frames, 0.0);
    std::vector<double> ds(frames, 0.0);
    PixelProblem::Gradients g;
    g.f0.assign(n, 0.0);
    g.fplus.assign(n, 0.0);
    g.h_f0.assign(n, 0.0);
    g.h_fplus.assign(n, 0.0);
    std::vector<double> v0(n, 0.0);
    std::vector<double> vp(n, 0.0);
    double vt = 0.0;

    auto rate = [&config](double curvature) {
        return config.step_size / std::max(1.0, curvature);
    };
    auto project = [](double x, double& v, double lo, double hi) {
        if (x <= lo || x >= hi) {
            v = 0.0;
            return std::clamp(x, lo, hi);
        }
        return x;
    };

    RunOutcome out;
    double previous = 0.0;
    int calm = 0;
    for (int it = 0; it < config.max_iterations; ++it) {
        fill_transition(frames, state.t_star, config.alpha, s, ds);
        const double ll = problem.fixed_loglik() + problem.evaluate(state.f0, state.fplus, s, ds, &g);
        if (!std::isfinite(ll)) {
            throw NumericError("non-finite log-likelihood during fit");
        }
        const double penalty =
            config.sparsity * std::accumulate(state.fplus.begin(), state.fplus.end(), 0.0);
        const double objective = ll - penalty;
        out.iterations = it + 1;
        if (objective > out.objective) {
            out.objective = objective;
            out.log_likelihood = ll;
            out.best = state;
        }
        // Converged once the objective is flat for three iterations and not
        // still recovering from a momentum overshoot past the best iterate.
        const double tol = config.convergence_tol * std::abs(objective);
        if (it > 0 && std::abs(objective - previous) <= tol && out.objective - objective <= tol) {
            if (++calm >= 3) {
                out.converged = true;
                break;
            }
        } else {
            calm = 0;
        }
        previous = objective;

        for (std::size_t j = 0; j < n; ++j) {
            const double r0 = rate(g.h_f0[j]);
            v0[j] = config.momentum * v0[j] + r0 * g.f0[j];
            if (!with_transition) {
                state.f0[j] = project(state.f0[j] + v0[j], v0[j], kMargin, 1.0 - kMargin);
                continue;
            }
            const double rp = rate(g.h_fplus[j]);
            vp[j] = config.momentum * vp[j] + rp * (g.fplus[j] - config.sparsity);
            const Point target{state.f0[j] + v0[j], state.fplus[j] + vp[j]};
            const Point next = project_feasible(target, r0, rp);
            if (next.f0 != target.f0 || next.fplus != target.fplus) {
                // Keep the momentum consistent with the step actually taken.
                v0[j] = next.f0 - state.f0[j];
                vp[j] = next.fplus - state.fplus[j];
            }
            state.f0[j] = next.f0;
            state.fplus[j] = next.fplus;
        }
        if (with_transition) {
            vt = config.momentum * vt + config.step_size * g.t_star / std::max(1.0, g.h_t_star);
            vt = std::clamp(vt, -max_t_velocity, max_t_velocity);
            const double next = state.t_star + vt;
            if (next <= 1.0 || next >= t_max) {
                state.t_star = std::clamp(next, 1.0, t_max);
                vt = 0.0;
            } else {
                state.t_star = next;
            }
        }
    }
    return out;
}

FitResult assemble(const ProbMapSeries& series, const PixelProblem& problem,
                   const FitConfig& config, const RunOutcome& run, int restart_index,
                   bool static_model) {
    FitResult r;
    r.location_id = series.location_id;
    r.model = FootprintModel::zeros(problem.width(), problem.height(), run.best.t_star,
                                    config.alpha);
    r.model.f0 = problem.fixed_f0();
    for (std::size_t j = 0; j < problem.active_count(); ++j) {
        const std::size_t i = problem.active()[j];
        r.model.f0[i] = run.best.f0[j];
        if (!static_model) {
            r.model.fplus[i] = run.best.fplus[j];
        }
    }
    r.log_likelihood = run.log_likelihood;
    r.converged = run.converged;
    r.iterations_used = run.iterations;
    r.restart_index = restart_index;
    r.static_model = static_model;
    return r;
}

void check_series(const ProbMapSeries& series, const FitConfig& config) {
    config.validate();
    series.validate();
}

RunOutcome run_static(const PixelProblem& problem, const FitConfig& config) {
    const std::size_t n = problem.active_count();
    const std::size_t frames = problem.frames();
    RunState init;
    init.f0.resize(n);
    init.fplus.assign(n, 0.0);
    init.t_star = 0.5 * (1.0 + double(frames));
    for (std::size_t j = 0; j < n; ++j) {
        init.f0[j] = std::clamp(problem.mean_probability(j, 0, frames), kMargin, 1.0 - kMargin);
    }
    return ascend(problem, config, std::move(init), false);
}

struct PairFit {
    FitResult unrestricted;
    FitResult static_fit;
};

PairFit fit_pair(const ProbMapSeries& series, const FitConfig& config) {
    check_series(series, config);
    const PixelProblem problem(series);
    const std::size_t n = problem.active_count();
    const std::size_t frames = problem.frames();

    const RunOutcome static_run = run_static(problem, config);

    // Quartile initialisation: f0 from the early frames, fplus from the
    // increase between the early and late frames.
    const std::size_t quarter = std::max<std::size_t>(1, frames / 4);
    RunState base;
    base.f0.resize(n);
    base.fplus.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double early = problem.mean_probability(j, 0, quarter);
        const double late = problem.mean_probability(j, frames - quarter, frames);
        base.f0[j] = std::clamp(early, kMargin, 1.0 - kMargin);
        base.fplus[j] = std::clamp(late - early, 0.0, 1.0 - kMargin - base.f0[j]);
    }

    Rng rng(config.seed);
    const double span = double(frames) - 1.0;
    const double spacing = span / double(config.restarts);
    RunOutcome best;
    int best_index = -1;
    for (int r = 0; r < config.restarts; ++r) {
        RunState init = base;
        const double jitter = rng.uniform(-0.25, 0.25) * spacing;
        init.t_star = std::clamp(1.0 + spacing * (double(r) + 0.5) + jitter, 1.0, double(frames));
        RunOutcome run = ascend(problem, config, std::move(init), true);
        if (run.objective > best.objective) {
            best = std::move(run);
            best_index = r;
        }
    }
    // The static optimum is itself a feasible unrestricted model (fplus = 0).
    // Keeping it as a candidate guarantees logL_u >= logL_s exactly.
    if (!(best.objective >= static_run.objective)) {
        best = static_run;
        best.best.fplus.assign(n, 0.0);
        best_index = config.restarts;
    }

    PairFit out;
    out.unrestricted = assemble(series, problem, config, best, best_index, false);
    out.static_fit = assemble(series, problem, config, static_run, 0, true);
    return out;
}

}  // namespace

void FitConfig::validate() const {
    if (max_iterations < 1) {
        throw InvalidArgument("max_iterations must be positive");
    }
    if (!(step_size > 0.0)) {
        throw InvalidArgument("step_size must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw InvalidArgument("momentum must lie in [0, 1)");
    }
    if (!(convergence_tol > 0.0)) {
        throw InvalidArgument("convergence_tol must be positive");
    }
    if (!(alpha > 0.0)) {
        throw InvalidArgument("alpha must be positive");
    }
    if (restarts < 1) {
        throw InvalidArgument("restarts must be at least 1");
    }
    if (!(sparsity >= 0.0)) {
        throw InvalidArgument("sparsity penalty must be non-negative");
    }
}

std::size_t BinaryMap::count() const {
    return std::size_t(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

NullDistribution::NullDistribution(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) {
        throw InvalidArgument("null distribution needs at least one value");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

double NullDistribution::percentile(double test_statistic) const {
    const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), test_statistic);
    const auto hi = std::upper_bound(sorted_.begin(), sorted_.end(), test_statistic);
    const double below = double(lo - sorted_.begin());
    const double ties = double(hi - lo);
    const double rank = ties > 0.0 ? below + 0.5 * (ties + 1.0) : below;
    return rank / double(sorted_.size());
}

FitResult fit_unrestricted(const ProbMapSeries& series, const FitConfig& config) {
    return fit_pair(series, config).unrestricted;
}

FitResult fit_static(const ProbMapSeries& series, const FitConfig& config) {
    check_series(series, config);
    const PixelProblem problem(series);
    return assemble(series, problem, config, run_static(problem, config), 0, true);
}

double test_statistic(const FitResult& unrestricted, const FitResult& static_fit) {
    if (unrestricted.location_id != static_fit.location_id) {
        throw InvalidArgument("test statistic requires fits of the same location");
    }
    return std::max(0.0, unrestricted.log_likelihood - static_fit.log_likelihood);
}

BinaryMap threshold_map(int width, int height, const std::vector<double>& values,
                        double threshold) {
    BinaryMap m;
    m.width = width;
    m.height = height;
    m.cells.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        m.cells[i] = values[i] >= threshold ? 1 : 0;
    }
    return m;
}

DetectionReport detect(const ProbMapSeries& series, const FitConfig& config,
                       const NullDistribution* null) {
    const PairFit fits = fit_pair(series, config);
    const FootprintModel& model = fits.unrestricted.model;

    DetectionReport report;
    report.location_id = series.location_id;
    report.log_likelihood_unrestricted = fits.unrestricted.log_likelihood;
    report.log_likelihood_static = fits.static_fit.log_likelihood;
    report.test_statistic = test_statistic(fits.unrestricted, fits.static_fit);
    report.t_star_index = model.t_star;
    const long nearest = std::clamp(std::lround(model.t_star), 1L, long(series.maps.size()));
    report.t_star_date = series.maps[std::size_t(nearest - 1)].timestamp;
    report.footprint_before = threshold_map(model.width, model.height, model.f0);
    report.footprint_added = threshold_map(model.width, model.height, model.fplus);
    report.expansion_area_m2 =
        double(report.footprint_added.count()) * series.pixel_size_m * series.pixel_size_m;
    if (null != nullptr) {
        report.null_percentile = null->percentile(report.test_statistic);
    }
    return report;
}

NullDistribution calibrate_null(std::span<const DetectionReport> reports) {
    if (reports.empty()) {
        throw InvalidArgument("null calibration needs at least one report");
    }
    std::vector<double> values;
    values.reserve(reports.size());
    for (const DetectionReport& r : reports) {
        values.push_back(r.test_statistic);
    }
    return NullDistribution(std::move(values));
}

std::vector<DetectionReport> rank_locations(std::vector<DetectionReport> reports) {
    std::stable_sort(reports.begin(), reports.end(),
                     [](const DetectionReport& a, const DetectionReport& b) {
                         if (a.test_statistic != b.test_statistic) {
                             return a.test_statistic > b.test_statistic;
                         }
                         return a.location_id < b.location_id;
                     });
    return reports;
}

}  // namespace shedwatch
