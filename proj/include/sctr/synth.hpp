#pragma once

#include <array>
#include <cmath>
#include <random>

#include "sctr/tensor.hpp"

namespace sctr {

/// Piecewise rank-1 test tensor: four quadrant regions, each the outer
/// product of smooth low-harmonic factors with a quadrant-specific intensity
/// level, so the axis-3 mean separates the regions cleanly.
inline DenseTensor3<double> make_quadrant_tensor(int n = 96, int bands = 8) {
    if (n < 2 || bands < 1)
        throw ArgumentError("make_quadrant_tensor: need n >= 2 and bands >= 1");
    const double two_pi = 2.0 * M_PI;
    const std::array<double, 4> level{0.25, 0.55, 0.85, 1.15};
    const std::array<double, 4> fu{0.50, 1.00, 0.75, 1.25};
    const std::array<double, 4> fv{0.75, 0.50, 1.25, 1.00};
    const std::array<double, 4> fw{0.50, 1.00, 1.50, 0.75};
    const std::array<double, 4> phase{0.0, 0.9, 1.7, 2.6};

    const int half = n / 2;
    DenseTensor3<double> t(n, n, bands);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int q = (i >= half ? 2 : 0) + (j >= half ? 1 : 0);
            const int r0 = i >= half ? half : 0;
            const int c0 = j >= half ? half : 0;
            const int rows = i >= half ? n - half : half;
            const int cols = j >= half ? n - half : half;
            const double ti = rows > 1 ? double(i - r0) / (rows - 1) : 0.0;
            const double tj = cols > 1 ? double(j - c0) / (cols - 1) : 0.0;
            const double u = 1.0 + 0.25 * std::sin(two_pi * fu[q] * ti + phase[q]);
            const double v = 1.0 + 0.25 * std::cos(two_pi * fv[q] * tj + phase[q]);
            for (int k = 0; k < bands; ++k) {
                const double tk = bands > 1 ? double(k) / (bands - 1) : 0.0;
                const double w =
                    level[q] * (1.0 + 0.3 * std::cos(two_pi * fw[q] * tk + phase[q]));
                t(i, j, k) = u * v * w;
            }
        }
    }
    return t;
}

/// Random Tucker-form tensor with known multilinear ranks.
inline DenseTensor3<double> make_random_tucker(std::mt19937& gen, std::array<int, 3> dims,
                                               std::array<int, 3> ranks,
                                               double scale = 1.0) {
    for (int a = 0; a < 3; ++a)
        if (ranks[a] < 1 || ranks[a] > dims[a])
            throw ArgumentError("make_random_tucker: rank out of range");
    std::normal_distribution<double> dist(0.0, 1.0);
    CoreTensor3<double> core(ranks[0], ranks[1], ranks[2]);
    for (auto& v : core.data) v = scale * dist(gen);
    std::array<Matrix<double>, 3> factors;
    for (int a = 0; a < 3; ++a) {
        factors[a] = Matrix<double>(dims[a], ranks[a]);
        for (Eigen::Index i = 0; i < factors[a].size(); ++i) factors[a](i) = dist(gen);
        factors[a] /= std::sqrt(static_cast<double>(dims[a]));
    }
    return tucker_compose(core, factors[0], factors[1], factors[2]);
}

} // namespace sctr
