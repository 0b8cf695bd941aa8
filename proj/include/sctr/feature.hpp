#pragma once

#include <string>
#include <vector>

#include "sctr/tensor.hpp"

namespace sctr {

enum class FeatureMode { gray_mean, pca3 };

inline FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "gray_mean") return FeatureMode::gray_mean;
    if (s == "pca3") return FeatureMode::pca3;
    throw ArgumentError("unknown feature mode: " + s);
}

/// 1- or 3-channel feature image over the spatial grid. channels are rescaled
/// to [0,1]; raw keeps the pre-rescale values for inspection.
struct FeatureImage {
    std::vector<Matrix<double>> channels;
    std::vector<Matrix<double>> raw;
    bool pca_fallback = false; // pca3 requested with fewer than 3 bands
    // Multiplier applied to channels inside SLIC distance computation. Unit-range
    // channels use 100 so compactness values calibrated for CIELAB carry over;
    // channels already in a Lab-like range set 1.
    double slic_scale = 100.0;
};

namespace detail {

inline Matrix<double> rescale_unit(const Matrix<double>& m) {
    double lo = m.minCoeff(), hi = m.maxCoeff();
    if (hi - lo <= 0.0) return Matrix<double>::Constant(m.rows(), m.cols(), 0.5);
    return ((m.array() - lo) / (hi - lo)).matrix();
}

} // namespace detail

namespace detail {

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
    const double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t)
                                     : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

} // namespace detail

/// sRGB (three [0,1] channels) to CIELAB under D65. The result carries
/// slic_scale = 1 since Lab is already in the range compactness expects.
inline FeatureImage rgb_to_lab(const FeatureImage& rgb) {
    if (rgb.channels.size() != 3) throw ArgumentError("rgb_to_lab: needs 3 channels");
    const auto& r = rgb.channels[0];
    const auto& g = rgb.channels[1];
    const auto& b = rgb.channels[2];
    FeatureImage out;
    out.slic_scale = 1.0;
    Matrix<double> L(r.rows(), r.cols()), A(r.rows(), r.cols()), B(r.rows(), r.cols());
    for (Eigen::Index i = 0; i < r.rows(); ++i)
        for (Eigen::Index j = 0; j < r.cols(); ++j) {
            double rl = detail::srgb_to_linear(r(i, j));
            double gl = detail::srgb_to_linear(g(i, j));
            double bl = detail::srgb_to_linear(b(i, j));
            double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
            double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
            double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
            double fx = detail::lab_f(x / 0.95047);
            double fy = detail::lab_f(y);
            double fz = detail::lab_f(z / 1.08883);
            L(i, j) = 116.0 * fy - 16.0;
            A(i, j) = 500.0 * (fx - fy);
            B(i, j) = 200.0 * (fy - fz);
        }
    out.channels = {L, A, B};
    out.raw = out.channels;
    return out;
}

/// Collapse the guide tensor to the 2D feature image SLIC runs on.
/// gray_mean: per-pixel mean over axis 3. pca3: projections onto the first
/// three principal components of the axis-3 fibers (falls back to gray_mean
/// when axis 3 has fewer than 3 bands, setting pca_fallback).
template <class T>
FeatureImage guide_to_feature_image(const DenseTensor3<T>& guide, FeatureMode mode) {
    FeatureImage out;
    if (mode == FeatureMode::pca3 && guide.i3 < 3) {
        out = guide_to_feature_image(guide, FeatureMode::gray_mean);
        out.pca_fallback = true;
        return out;
    }
    if (mode == FeatureMode::gray_mean) {
        Matrix<double> m(guide.i1, guide.i2);
        for (int i = 0; i < guide.i1; ++i)
            for (int j = 0; j < guide.i2; ++j) {
                double acc = 0.0;
                for (int k = 0; k < guide.i3; ++k) acc += static_cast<double>(guide(i, j, k));
                m(i, j) = acc / guide.i3;
            }
        out.raw.push_back(m);
        out.channels.push_back(detail::rescale_unit(m));
        return out;
    }
    // pca3: rows are pixels, columns are bands, centered per band.
    const Eigen::Index npix = static_cast<Eigen::Index>(guide.i1) * guide.i2;
    Matrix<double> fibers(npix, guide.i3);
    for (int i = 0; i < guide.i1; ++i)
        for (int j = 0; j < guide.i2; ++j)
            for (int k = 0; k < guide.i3; ++k)
                fibers(static_cast<Eigen::Index>(i) * guide.i2 + j, k) =
                    static_cast<double>(guide(i, j, k));
    Vector<double> mean = fibers.colwise().mean();
    fibers.rowwise() -= mean.transpose();
    SvdResult dec = svd(fibers);
    for (int c = 0; c < 3; ++c) {
        Vector<double> proj = fibers * dec.v.col(c);
        Matrix<double> m(guide.i1, guide.i2);
        for (int i = 0; i < guide.i1; ++i)
            for (int j = 0; j < guide.i2; ++j)
                m(i, j) = proj(static_cast<Eigen::Index>(i) * guide.i2 + j);
        out.raw.push_back(m);
        out.channels.push_back(detail::rescale_unit(m));
    }
    return out;
}

} // namespace sctr
