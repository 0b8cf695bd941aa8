#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "sctr/tensor.hpp"

namespace sctr {

struct GuideConfig {
    std::array<double, 3> alpha{1.0 / 3, 1.0 / 3, 1.0 / 3};
    double rho = 1e-2;
    double rho_mul = 1.05;
    double tol = 1e-5;
    int max_iters = 300;
    // Data-adaptive rho: rho = max(alpha) / (rho_auto_tau * sigma_max(init)).
    // Off by default; the fixed default rho suits natural-image scales, while
    // small-spectrum synthetics need the adaptive start (see recovery tests).
    bool rho_auto = false;
    double rho_auto_tau = 0.3;
    // Record sum_i alpha_i * nuclear(unfold(X_t, i)) after every iteration.
    bool track_objective = false;
};

template <class T>
struct GuideResult {
    DenseTensor3<T> guide;
    int iterations_run = 0;
    double final_residual = 0.0;
    std::vector<double> objective_curve; // filled when track_objective is set
    int axis3_stride = 1;                // >1 when the guide ran on a band subsample
};

/// HaLRTC-style completion: per mode, M_i = fold(svt(unfold(X, i), alpha_i/rho), i);
/// X <- average of the M_i with observed entries re-imposed; rho <- rho_mul * rho.
/// The iterate is mean-centered internally (missing entries therefore start at the
/// observed mean) and the mean is added back on exit. Observed entries of the
/// returned guide equal the input exactly.
template <class T>
GuideResult<T> halrtc_complete(const DenseTensor3<T>& observed, const ObservationMask& mask,
                               const GuideConfig& cfg = {}) {
    if (!mask.congruent(observed)) throw ArgumentError("halrtc_complete: mask shape mismatch");
    if (mask.count_observed() == 0) throw ArgumentError("halrtc_complete: empty mask");
    double alpha_sum = cfg.alpha[0] + cfg.alpha[1] + cfg.alpha[2];
    if (std::abs(alpha_sum - 1.0) > 1e-9 || cfg.alpha[0] < 0 || cfg.alpha[1] < 0 ||
        cfg.alpha[2] < 0)
        throw ArgumentError("halrtc_complete: weights must be nonnegative and sum to 1");
    if (cfg.rho <= 0) throw ArgumentError("halrtc_complete: rho must be positive");
    if (cfg.max_iters < 1) throw ArgumentError("halrtc_complete: max_iters must be >= 1");

    const std::array<int, 3> shape{observed.i1, observed.i2, observed.i3};

    double mu = 0.0;
    std::size_t n_obs = 0;
    for (std::size_t n = 0; n < observed.size(); ++n)
        if (mask.flags[n]) {
            mu += static_cast<double>(observed.data[n]);
            ++n_obs;
        }
    mu /= static_cast<double>(n_obs);

    DenseTensor3<double> x(shape[0], shape[1], shape[2]);
    for (std::size_t n = 0; n < x.size(); ++n)
        x.data[n] = mask.flags[n] ? static_cast<double>(observed.data[n]) - mu : 0.0;

    double rho = cfg.rho;
    if (cfg.rho_auto) {
        double smax = 0.0;
        for (int mode = 1; mode <= 3; ++mode) {
            auto s = svd(unfold(x, mode)).s;
            if (s.size() > 0) smax = std::max(smax, s(0));
        }
        if (smax > 0.0)
            rho = *std::max_element(cfg.alpha.begin(), cfg.alpha.end()) /
                  (cfg.rho_auto_tau * smax);
    }

    GuideResult<T> result;
    double residual = 0.0;
    int ran = 0;
    for (int it = 0; it < cfg.max_iters; ++it) {
        DenseTensor3<double> next(shape[0], shape[1], shape[2]);
        for (int mode = 1; mode <= 3; ++mode) {
            double tau = cfg.alpha[mode - 1] / rho;
            DenseTensor3<double> m = fold(svt(unfold(x, mode), tau), mode, shape);
            for (std::size_t n = 0; n < next.size(); ++n) next.data[n] += m.data[n];
        }
        for (std::size_t n = 0; n < next.size(); ++n) {
            next.data[n] /= 3.0;
            if (mask.flags[n]) next.data[n] = x.data[n]; // observed entries held fixed
        }
        double diff = 0.0, base = 0.0;
        for (std::size_t n = 0; n < x.size(); ++n) {
            double d = next.data[n] - x.data[n];
            diff += d * d;
            base += x.data[n] * x.data[n];
        }
        residual = std::sqrt(diff) / std::max(std::sqrt(base), 1e-30);
        x = std::move(next);
        rho *= cfg.rho_mul;
        ran = it + 1;
        if (cfg.track_objective) {
            double obj = 0.0;
            for (int mode = 1; mode <= 3; ++mode)
                obj += cfg.alpha[mode - 1] * svd(unfold(x, mode)).s.sum();
            result.objective_curve.push_back(obj);
        }
        if (residual < cfg.tol) break;
    }

    DenseTensor3<T> guide(shape[0], shape[1], shape[2]);
    for (std::size_t n = 0; n < guide.size(); ++n)
        guide.data[n] = mask.flags[n] ? observed.data[n] : static_cast<T>(x.data[n] + mu);
    for (T v : guide.data)
        if (!std::isfinite(static_cast<double>(v)))
            throw NumericError("halrtc_complete: non-finite entry in guide");

    result.guide = std::move(guide);
    result.iterations_run = ran;
    result.final_residual = residual;
    return result;
}

/// Spec-shaped convenience overload.
template <class T>
GuideResult<T> halrtc_complete(const DenseTensor3<T>& observed, const ObservationMask& mask,
                               std::array<double, 3> weights, double rho, int max_iters,
                               double tol) {
    GuideConfig cfg;
    cfg.alpha = weights;
    cfg.rho = rho;
    cfg.max_iters = max_iters;
    cfg.tol = tol;
    return halrtc_complete(observed, mask, cfg);
}

/// Guide for long-axis-3 data (video): completes a strided band subsample when
/// axis 3 exceeds max_axis3_slices, since the guide only feeds segmentation.
/// The stride is recorded in the result; the returned guide keeps the reduced
/// band count (axis3_stride tells the caller how bands map back).
template <class T>
GuideResult<T> compute_guide(const DenseTensor3<T>& observed, const ObservationMask& mask,
                             const GuideConfig& cfg = {}, int max_axis3_slices = 64) {
    if (max_axis3_slices < 1) throw ArgumentError("compute_guide: slice cap must be >= 1");
    int stride = (observed.i3 + max_axis3_slices - 1) / max_axis3_slices;
    if (stride <= 1) return halrtc_complete(observed, mask, cfg);
    int kept = (observed.i3 + stride - 1) / stride;
    DenseTensor3<T> sub(observed.i1, observed.i2, kept);
    ObservationMask submask(observed.i1, observed.i2, kept);
    for (int i = 0; i < observed.i1; ++i)
        for (int j = 0; j < observed.i2; ++j)
            for (int k = 0; k < kept; ++k) {
                sub(i, j, k) = observed(i, j, k * stride);
                submask.at(i, j, k) = mask(i, j, k * stride) ? 1 : 0;
            }
    GuideResult<T> r = halrtc_complete(sub, submask, cfg);
    r.axis3_stride = stride;
    return r;
}

} // namespace sctr
