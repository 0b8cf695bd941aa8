#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sctr/tensor.hpp"

namespace sctr {

/// One evaluation record. peak is carried so reported numbers are
/// reproducible without guessing the data range.
struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::vector<double> per_band_psnr;
    double peak = 1.0;
};

namespace detail {

template <class T>
double mse(const DenseTensor3<T>& a, const DenseTensor3<T>& b) {
    double acc = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        double d = static_cast<double>(a.data[n]) - static_cast<double>(b.data[n]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

inline double psnr_from_mse(double mse, double peak) {
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

/// 11x11 Gaussian window, sigma 1.5, normalized to unit sum.
inline const Matrix<double>& ssim_window() {
    static const Matrix<double> w = [] {
        Matrix<double> win(11, 11);
        const double sigma = 1.5;
        double sum = 0.0;
        for (int r = 0; r < 11; ++r)
            for (int c = 0; c < 11; ++c) {
                double dr = r - 5, dc = c - 5;
                win(r, c) = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
                sum += win(r, c);
            }
        win /= sum;
        return win;
    }();
    return w;
}

} // namespace detail

template <class T>
double psnr(const DenseTensor3<T>& reference, const DenseTensor3<T>& estimate, double peak) {
    if (!reference.same_shape(estimate)) throw ArgumentError("psnr: shape mismatch");
    if (peak <= 0) throw ArgumentError("psnr: peak must be positive");
    return detail::psnr_from_mse(detail::mse(reference, estimate), peak);
}

/// Single-scale SSIM over one 2D band. Windows are applied in valid mode
/// (fully inside the image); the score is the unweighted mean of the map.
inline double ssim(const Matrix<double>& reference, const Matrix<double>& estimate,
                   double peak = 1.0) {
    if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
        throw ArgumentError("ssim: shape mismatch");
    if (reference.rows() < 11 || reference.cols() < 11)
        throw ArgumentError("ssim: window larger than image");
    const Matrix<double>& w = detail::ssim_window();
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const int vh = static_cast<int>(reference.rows()) - 10;
    const int vw = static_cast<int>(reference.cols()) - 10;
    double total = 0.0;
    for (int r = 0; r < vh; ++r) {
        for (int c = 0; c < vw; ++c) {
            double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
            for (int a = 0; a < 11; ++a)
                for (int b = 0; b < 11; ++b) {
                    double x = reference(r + a, c + b);
                    double y = estimate(r + a, c + b);
                    double g = w(a, b);
                    mx += g * x;
                    my += g * y;
                    xx += g * x * x;
                    yy += g * y * y;
                    xy += g * x * y;
                }
            double vx = xx - mx * mx;
            double vy = yy - my * my;
            double cov = xy - mx * my;
            total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    return total / (static_cast<double>(vh) * vw);
}

template <class T>
Matrix<double> band(const DenseTensor3<T>& t, int k) {
    Matrix<double> m(t.i1, t.i2);
    for (int i = 0; i < t.i1; ++i)
        for (int j = 0; j < t.i2; ++j) m(i, j) = static_cast<double>(t(i, j, k));
    return m;
}

/// 3D SSIM: per-band scores along axis 3, arithmetic mean.
template <class T>
double ssim(const DenseTensor3<T>& reference, const DenseTensor3<T>& estimate,
            double peak = 1.0) {
    if (!reference.same_shape(estimate)) throw ArgumentError("ssim: shape mismatch");
    double total = 0.0;
    for (int k = 0; k < reference.i3; ++k)
        total += ssim(band(reference, k), band(estimate, k), peak);
    return total / reference.i3;
}

template <class T>
MetricReport compute_metrics(const DenseTensor3<T>& reference, const DenseTensor3<T>& estimate,
                             double peak) {
    if (!reference.same_shape(estimate)) throw ArgumentError("compute_metrics: shape mismatch");
    MetricReport rep;
    rep.peak = peak;
    rep.psnr_db = psnr(reference, estimate, peak);
    rep.ssim = ssim(reference, estimate, peak);
    rep.per_band_psnr.reserve(reference.i3);
    for (int k = 0; k < reference.i3; ++k) {
        DenseTensor3<T> rb(reference.i1, reference.i2, 1), eb(reference.i1, reference.i2, 1);
        for (int i = 0; i < reference.i1; ++i)
            for (int j = 0; j < reference.i2; ++j) {
                rb(i, j, 0) = reference(i, j, k);
                eb(i, j, 0) = estimate(i, j, k);
            }
        rep.per_band_psnr.push_back(psnr(rb, eb, peak));
    }
    return rep;
}

/// One CSV row: dataset, method, sampling_rate, psnr_db, ssim.
inline std::string metric_csv_row(const MetricReport& rep, const std::string& dataset,
                                  const std::string& method, double sampling_rate) {
    std::ostringstream os;
    os.precision(10);
    os << dataset << ',' << method << ',' << sampling_rate << ',';
    if (std::isinf(rep.psnr_db))
        os << "inf";
    else
        os << rep.psnr_db;
    os << ',' << rep.ssim;
    return os.str();
}

} // namespace sctr
