#pragma once

// Before/after footprint model and its log-likelihood against a series of
// class-probability maps.
//
// Frames are indexed t = 1..T. The expected footprint at frame t is
//
//     Z_t = clamp(f0 + fplus * S((t - t_star) / alpha), 0, 1)
//
// with S the logistic function: f0 is the footprint before the expansion,
// fplus the added footprint, t_star the transition time and alpha the
// transition duration (larger alpha = slower construction). Z is
// non-decreasing in t, so sheds are only ever added.
//
// Each unmasked pixel-frame contributes log(p Z + (1 - p)(1 - Z)), the
// Bernoulli agreement between segmenter probability p and model Z, with the
// argument clamped to [kLogFloor, 1].

#include <cstddef>
#include <vector>

#include "shedwatch/spectral.hpp"

namespace shedwatch {

inline constexpr double kLogFloor = 1e-9;
inline constexpr double kDefaultAlpha = 1.0;

enum class LikelihoodForm {
    bernoulli,  // log(p Z + (1 - p)(1 - Z)); used by the detector
    product,    // log(p Z); degenerate on background pixels, kept for comparison
};

struct FootprintModel {
    int width = 0;
    int height = 0;
    std::vector<double> f0;     // row-major, entries in [0, 1]
    std::vector<double> fplus;  // row-major, entries in [0, 1]
    double t_star = 1.0;
    double alpha = kDefaultAlpha;

    static FootprintModel zeros(int width, int height, double t_star = 1.0,
                                double alpha = kDefaultAlpha);

    std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
    void validate() const;
};

// Partial derivatives of the log-likelihood. alpha is a fixed hyperparameter
// and has no component.
struct ModelGradient {
    std::vector<double> d_f0;
    std::vector<double> d_fplus;
    double d_t_star = 0.0;
};

// 1 / (1 + exp(-(t - t_star) / alpha)).
double sigmoid_transition(double t, double t_star, double alpha);

// Z_t for frame index t (1-based, real-valued).
std::vector<double> footprint_at(const FootprintModel& model, double t);

double log_likelihood(const FootprintModel& model, const ProbMapSeries& series,
                      LikelihoodForm form = LikelihoodForm::bernoulli);

// Analytic gradient of log_likelihood. Terms whose log argument sits on the
// kLogFloor clamp, and pixels whose Z saturates at 1, contribute zero.
ModelGradient grad_log_likelihood(const FootprintModel& model, const ProbMapSeries& series,
                                  LikelihoodForm form = LikelihoodForm::bernoulli);

}  // namespace shedwatch
