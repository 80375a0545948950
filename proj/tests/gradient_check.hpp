#pragma once

// Finite-difference check of the analytic log-likelihood gradient, shared by
// the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "oracles.hpp"
#include "shedwatch/footprint_model.hpp"
#include "shedwatch/random.hpp"

namespace shedwatch::test {

struct GradientCheck {
    double worst_relative_error = 0.0;
    std::size_t components = 0;
};

inline double relative_error(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) / scale;
}

// One seeded random (model, series) pair of size up to max_side x max_side x
// max_frames. Pixel components are differenced on that pixel's own terms,
// which are the only ones they affect; the transition time on the whole sum.
inline GradientCheck check_gradient(std::uint64_t seed, int max_side, int max_frames,
                                    double step = 1e-5) {
    Rng rng(seed);
    const int w = 1 + int(rng.uniform_int(0, max_side - 1));
    const int h = 1 + int(rng.uniform_int(0, max_side - 1));
    const int frames = 2 + int(rng.uniform_int(0, max_frames - 2));
    const ProbMapSeries series = oracle::random_series(w, h, frames, rng.engine()());
    const FootprintModel model = oracle::random_model(w, h, frames, rng);
    const ModelGradient grad = grad_log_likelihood(model, series);

    GradientCheck out;
    const auto record = [&out](double analytic, double numeric) {
        out.worst_relative_error = std::max(out.worst_relative_error, relative_error(analytic, numeric));
        ++out.components;
    };

    for (std::size_t i = 0; i < model.pixel_count(); ++i) {
        FootprintModel pixel = FootprintModel::zeros(1, 1, model.t_star, model.alpha);
        ProbMapSeries pixel_series;
        pixel_series.location_id = series.location_id;
        for (const ProbMap& pm : series.maps) {
            ProbMap one = ProbMap::filled(1, 1, pm.values[i], pm.timestamp);
            one.mask[0] = pm.mask[i];
            pixel_series.maps.push_back(one);
        }
        const auto at = [&](double f0, double fplus) {
            pixel.f0[0] = f0;
            pixel.fplus[0] = fplus;
            return log_likelihood(pixel, pixel_series);
        };
        const double f0 = model.f0[i];
        const double fp = model.fplus[i];
        record(grad.d_f0[i], (at(f0 + step, fp) - at(f0 - step, fp)) / (2 * step));
        record(grad.d_fplus[i], (at(f0, fp + step) - at(f0, fp - step)) / (2 * step));
    }

    FootprintModel shifted = model;
    shifted.t_star = model.t_star + step;
    const double up = log_likelihood(shifted, series);
    shifted.t_star = model.t_star - step;
    const double down = log_likelihood(shifted, series);
    record(grad.d_t_star, (up - down) / (2 * step));
    return out;
}

}  // namespace shedwatch::test
