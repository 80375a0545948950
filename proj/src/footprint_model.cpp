#include "shedwatch/footprint_model.hpp"

#include <algorithm>
#include <cmath>

#include "shedwatch/errors.hpp"

namespace shedwatch {

namespace {

void check_dimensions(const FootprintModel& model, const ProbMapSeries& series) {
    if (series.maps.size() < 2) {
        throw InvalidArgument("series needs at least 2 maps");
    }
    if (model.f0.size() != model.pixel_count() || model.fplus.size() != model.pixel_count()) {
        throw InvalidArgument("model buffers do not match its dimensions");
    }
    for (const ProbMap& pm : series.maps) {
        if (pm.width != model.width || pm.height != model.height) {
            throw InvalidArgument("model and probability map dimensions differ");
        }
    }
    if (!(model.alpha > 0.0)) {
        throw InvalidArgument("alpha must be positive");
    }
}

struct Term {
    double log_arg;
    double dlog_dz;  // zero when the floor clamp is active
};

Term likelihood_term(double p, double z, LikelihoodForm form) {
    double arg = 0.0;
    double darg = 0.0;
    if (form == LikelihoodForm::bernoulli) {
        arg = p * z + (1.0 - p) * (1.0 - z);
        darg = 2.0 * p - 1.0;
    } else {
        arg = p * z;
        darg = p;
    }
    if (arg < kLogFloor) {
        return {std::log(kLogFloor), 0.0};
    }
    arg = std::min(arg, 1.0);
    return {std::log(arg), darg / arg};
}

}  // namespace

FootprintModel FootprintModel::zeros(int width, int height, double t_star, double alpha) {
    FootprintModel m;
    m.width = width;
    m.height = height;
    m.f0.assign(m.pixel_count(), 0.0);
    m.fplus.assign(m.pixel_count(), 0.0);
    m.t_star = t_star;
    m.alpha = alpha;
    return m;
}

void FootprintModel::validate() const {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("model dimensions must be positive");
    }
    if (f0.size() != pixel_count() || fplus.size() != pixel_count()) {
        throw InvalidArgument("model buffers do not match its dimensions");
    }
    if (!(alpha > 0.0)) {
        throw InvalidArgument("alpha must be positive");
    }
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!std::all_of(f0.begin(), f0.end(), in_unit) ||
        !std::all_of(fplus.begin(), fplus.end(), in_unit)) {
        throw InvalidArgument("footprint entries must lie in [0, 1]");
    }
}

double sigmoid_transition(double t, double t_star, double alpha) {
    if (!(alpha > 0.0)) {
        throw InvalidArgument("alpha must be positive");
    }
    return 1.0 / (1.0 + std::exp(-(t - t_star) / alpha));
}

std::vector<double> footprint_at(const FootprintModel& model, double t) {
    const double s = sigmoid_transition(t, model.t_star, model.alpha);
    std::vector<double> z(model.pixel_count());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = std::clamp(model.f0[i] + model.fplus[i] * s, 0.0, 1.0);
    }
    return z;
}

double log_likelihood(const FootprintModel& model, const ProbMapSeries& series,
                      LikelihoodForm form) {
    check_dimensions(model, series);
    double total = 0.0;
    for (std::size_t k = 0; k < series.maps.size(); ++k) {
        const ProbMap& pm = series.maps[k];
        const double s = sigmoid_transition(double(k + 1), model.t_star, model.alpha);
        double frame_sum = 0.0;
        for (std::size_t i = 0; i < pm.pixel_count(); ++i) {
            if (pm.mask[i] != 0) {
                continue;
            }
            const double z = std::clamp(model.f0[i] + model.fplus[i] * s, 0.0, 1.0);
            frame_sum += likelihood_term(pm.values[i], z, form).log_arg;
        }
        total += frame_sum;
    }
    return total;
}

ModelGradient grad_log_likelihood(const FootprintModel& model, const ProbMapSeries& series,
                                  LikelihoodForm form) {
    check_dimensions(model, series);
    ModelGradient g;
    g.d_f0.assign(model.pixel_count(), 0.0);
    g.d_fplus.assign(model.pixel_count(), 0.0);
    for (std::size_t k = 0; k < series.maps.size(); ++k) {
        const ProbMap& pm = series.maps[k];
        const double s = sigmoid_transition(double(k + 1), model.t_star, model.alpha);
        // dS/dt_star
        const double ds = -s * (1.0 - s) / model.alpha;
        for (std::size_t i = 0; i < pm.pixel_count(); ++i) {
            if (pm.mask[i] != 0) {
                continue;
            }
            const double raw = model.f0[i] + model.fplus[i] * s;
            if (raw > 1.0 || raw < 0.0) {
                continue;  // saturated clamp on Z
            }
            const double dz = likelihood_term(pm.values[i], raw, form).dlog_dz;
            g.d_f0[i] += dz;
            g.d_fplus[i] += dz * s;
            g.d_t_star += dz * model.fplus[i] * ds;
        }
    }
    return g;
}

}  // namespace shedwatch
