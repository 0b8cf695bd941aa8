#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "sctr/common.hpp"

namespace sctr {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Dense 3rd-order tensor, row-major with axis 3 fastest:
/// flat index of (i,j,k) is (i*I2 + j)*I3 + k.
template <class T>
struct DenseTensor3 {
    int i1 = 0, i2 = 0, i3 = 0;
    std::vector<T> data;

    DenseTensor3() = default;
    DenseTensor3(int n1, int n2, int n3, T fill = T(0)) : i1(n1), i2(n2), i3(n3) {
        if (n1 <= 0 || n2 <= 0 || n3 <= 0)
            throw ArgumentError("DenseTensor3: shape must be positive");
        data.assign(static_cast<std::size_t>(n1) * n2 * n3, fill);
    }

    std::size_t size() const { return data.size(); }
    int dim(int mode) const { return mode == 1 ? i1 : (mode == 2 ? i2 : i3); }

    T& operator()(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * i2 + j) * i3 + k];
    }
    const T& operator()(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * i2 + j) * i3 + k];
    }

    bool same_shape(const DenseTensor3& o) const {
        return i1 == o.i1 && i2 == o.i2 && i3 == o.i3;
    }

    template <class U>
    DenseTensor3<U> cast() const {
        DenseTensor3<U> out(i1, i2, i3);
        for (std::size_t n = 0; n < data.size(); ++n) out.data[n] = static_cast<U>(data[n]);
        return out;
    }
};

/// Core tensors share the dense layout; ranks play the role of the shape.
template <class T>
using CoreTensor3 = DenseTensor3<T>;

/// Observation mask over the same index space as its tensor. true = observed.
struct ObservationMask {
    int i1 = 0, i2 = 0, i3 = 0;
    std::vector<uint8_t> flags;

    ObservationMask() = default;
    ObservationMask(int n1, int n2, int n3, bool fill = false) : i1(n1), i2(n2), i3(n3) {
        if (n1 <= 0 || n2 <= 0 || n3 <= 0)
            throw ArgumentError("ObservationMask: shape must be positive");
        flags.assign(static_cast<std::size_t>(n1) * n2 * n3, fill ? 1 : 0);
    }

    std::size_t size() const { return flags.size(); }
    uint8_t& at(int i, int j, int k) {
        return flags[(static_cast<std::size_t>(i) * i2 + j) * i3 + k];
    }
    bool operator()(int i, int j, int k) const {
        return flags[(static_cast<std::size_t>(i) * i2 + j) * i3 + k] != 0;
    }
    std::size_t count_observed() const {
        std::size_t c = 0;
        for (uint8_t f : flags) c += (f != 0);
        return c;
    }
    template <class T>
    bool congruent(const DenseTensor3<T>& t) const {
        return i1 == t.i1 && i2 == t.i2 && i3 == t.i3;
    }
};

template <class T>
double frobenius_norm(const DenseTensor3<T>& t) {
    double acc = 0.0;
    for (T v : t.data) acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

namespace detail {

inline void check_mode(int mode) {
    if (mode < 1 || mode > 3) throw ArgumentError("mode must be 1, 2, or 3");
}

} // namespace detail

/// Mode-n matricization. Row r is slice index along the chosen axis; columns
/// enumerate the remaining axes with the lower-numbered axis varying fastest:
///   mode 1: col = j + k*I2,  mode 2: col = i + k*I1,  mode 3: col = i + j*I1.
template <class T>
Matrix<T> unfold(const DenseTensor3<T>& t, int mode) {
    detail::check_mode(mode);
    Matrix<T> m;
    if (mode == 1) {
        m.resize(t.i1, static_cast<Eigen::Index>(t.i2) * t.i3);
        for (int i = 0; i < t.i1; ++i)
            for (int k = 0; k < t.i3; ++k)
                for (int j = 0; j < t.i2; ++j)
                    m(i, j + static_cast<Eigen::Index>(k) * t.i2) = t(i, j, k);
    } else if (mode == 2) {
        m.resize(t.i2, static_cast<Eigen::Index>(t.i1) * t.i3);
        for (int j = 0; j < t.i2; ++j)
            for (int k = 0; k < t.i3; ++k)
                for (int i = 0; i < t.i1; ++i)
                    m(j, i + static_cast<Eigen::Index>(k) * t.i1) = t(i, j, k);
    } else {
        m.resize(t.i3, static_cast<Eigen::Index>(t.i1) * t.i2);
        for (int k = 0; k < t.i3; ++k)
            for (int j = 0; j < t.i2; ++j)
                for (int i = 0; i < t.i1; ++i)
                    m(k, i + static_cast<Eigen::Index>(j) * t.i1) = t(i, j, k);
    }
    return m;
}

/// Inverse of unfold for the declared column convention.
template <class T>
DenseTensor3<T> fold(const Matrix<T>& m, int mode, std::array<int, 3> shape) {
    detail::check_mode(mode);
    const int i1 = shape[0], i2 = shape[1], i3 = shape[2];
    if (m.rows() != shape[mode - 1])
        throw ArgumentError("fold: row count does not match target axis length");
    const Eigen::Index want_cols = static_cast<Eigen::Index>(i1) * i2 * i3 / shape[mode - 1];
    if (m.cols() != want_cols) throw ArgumentError("fold: column count does not match shape");
    DenseTensor3<T> t(i1, i2, i3);
    if (mode == 1) {
        for (int i = 0; i < i1; ++i)
            for (int k = 0; k < i3; ++k)
                for (int j = 0; j < i2; ++j)
                    t(i, j, k) = m(i, j + static_cast<Eigen::Index>(k) * i2);
    } else if (mode == 2) {
        for (int j = 0; j < i2; ++j)
            for (int k = 0; k < i3; ++k)
                for (int i = 0; i < i1; ++i)
                    t(i, j, k) = m(j, i + static_cast<Eigen::Index>(k) * i1);
    } else {
        for (int k = 0; k < i3; ++k)
            for (int j = 0; j < i2; ++j)
                for (int i = 0; i < i1; ++i)
                    t(i, j, k) = m(k, i + static_cast<Eigen::Index>(j) * i1);
    }
    return t;
}

/// t ×_n m: replaces axis n (length I_n) by the matrix row count J.
template <class T>
DenseTensor3<T> mode_n_product(const DenseTensor3<T>& t, const Matrix<T>& m, int mode) {
    detail::check_mode(mode);
    if (m.cols() != t.dim(mode))
        throw ArgumentError("mode_n_product: matrix columns must equal the tensor's mode length");
    std::array<int, 3> shape{t.i1, t.i2, t.i3};
    shape[mode - 1] = static_cast<int>(m.rows());
    Matrix<T> prod = m * unfold(t, mode);
    return fold(prod, mode, shape);
}

/// Tucker composition C ×_1 U ×_2 V ×_3 W as sequential mode products 1,2,3.
template <class T>
DenseTensor3<T> tucker_compose(const CoreTensor3<T>& core, const Matrix<T>& u,
                               const Matrix<T>& v, const Matrix<T>& w) {
    if (u.cols() != core.i1 || v.cols() != core.i2 || w.cols() != core.i3)
        throw ArgumentError("tucker_compose: factor column counts must match core ranks");
    DenseTensor3<T> x = mode_n_product(core, u, 1);
    x = mode_n_product(x, v, 2);
    x = mode_n_product(x, w, 3);
    return x;
}

/// Thin SVD result, always double precision.
struct SvdResult {
    Matrix<double> u;
    Vector<double> s;
    Matrix<double> v;
};

/// Thin SVD m = U diag(s) V^T with s nonincreasing. Computed in double
/// precision regardless of the caller's working precision.
template <class T>
SvdResult svd(const Matrix<T>& m) {
    Matrix<double> md = m.template cast<double>();
    if (!md.allFinite()) throw NumericError("svd: input has non-finite entries");
    Eigen::BDCSVD<Matrix<double>> solver(md, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success)
        throw NumericError("svd: decomposition failed to converge");
    return SvdResult{solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

/// Soft singular-value thresholding: U diag(max(s - tau, 0)) V^T.
template <class T>
Matrix<T> svt(const Matrix<T>& m, double tau) {
    if (tau < 0) throw ArgumentError("svt: tau must be nonnegative");
    SvdResult r = svd(m);
    Vector<double> shrunk = (r.s.array() - tau).max(0.0);
    Matrix<double> out = r.u * shrunk.asDiagonal() * r.v.transpose();
    return out.template cast<T>();
}

/// Nuclear norm (sum of singular values).
template <class T>
double nuclear_norm(const Matrix<T>& m) {
    return svd(m).s.sum();
}

} // namespace sctr
