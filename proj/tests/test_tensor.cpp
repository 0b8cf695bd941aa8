#include <gtest/gtest.h>

#include "sctr/tensor.hpp"
#include "test_util.hpp"

using sctr::DenseTensor3;
using sctr::Matrix;

TEST(Frobenius, ZeroTensor) {
    DenseTensor3<double> t(2, 2, 2);
    EXPECT_EQ(sctr::frobenius_norm(t), 0.0);
}

TEST(Frobenius, SingleEntry) {
    DenseTensor3<double> t(3, 2, 4);
    t(1, 0, 2) = 3.0;
    EXPECT_DOUBLE_EQ(sctr::frobenius_norm(t), 3.0);
}

TEST(Frobenius, MatchesBruteForce) {
    auto& gen = testutil::rng(11);
    auto t = testutil::random_tensor(gen, 4, 3, 2);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 2; ++k) acc += t(i, j, k) * t(i, j, k);
    double want = std::sqrt(acc);
    EXPECT_NEAR(sctr::frobenius_norm(t), want, 1e-12 * want);
}

TEST(Unfold, SmallestCaseMode1) {
    DenseTensor3<double> t(2, 2, 2);
    int v = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) t(i, j, k) = v++;
    Matrix<double> m = sctr::unfold(t, 1);
    ASSERT_EQ(m.rows(), 2);
    ASSERT_EQ(m.cols(), 4);
    // columns: (j,k) with j fastest -> (0,0),(1,0),(0,1),(1,1)
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(m(i, 0), t(i, 0, 0));
        EXPECT_EQ(m(i, 1), t(i, 1, 0));
        EXPECT_EQ(m(i, 2), t(i, 0, 1));
        EXPECT_EQ(m(i, 3), t(i, 1, 1));
    }
}

TEST(Unfold, FoldInverseOnRandom) {
    auto& gen = testutil::rng(12);
    auto t = testutil::random_tensor(gen, 3, 4, 5);
    for (int mode = 1; mode <= 3; ++mode) {
        auto back = sctr::fold(sctr::unfold(t, mode), mode, {3, 4, 5});
        ASSERT_TRUE(back.same_shape(t));
        for (std::size_t n = 0; n < t.size(); ++n) EXPECT_EQ(back.data[n], t.data[n]);
    }
}

TEST(Unfold, FoldInverseExhaustiveSweep) {
    auto& gen = testutil::rng(13);
    for (int i1 = 1; i1 <= 7; ++i1)
        for (int i2 = 1; i2 <= 6; ++i2)
            for (int i3 = 1; i3 <= 5; ++i3) {
                auto t = testutil::random_tensor(gen, i1, i2, i3);
                for (int mode = 1; mode <= 3; ++mode) {
                    auto back = sctr::fold(sctr::unfold(t, mode), mode, {i1, i2, i3});
                    ASSERT_EQ(back.data, t.data) << i1 << "x" << i2 << "x" << i3
                                                 << " mode " << mode;
                }
            }
}

TEST(Unfold, RankOneTensorHasRankOneUnfoldings) {
    auto& gen = testutil::rng(14);
    auto u = testutil::random_matrix(gen, 5, 1);
    auto v = testutil::random_matrix(gen, 4, 1);
    auto w = testutil::random_matrix(gen, 3, 1);
    DenseTensor3<double> t(5, 4, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 3; ++k) t(i, j, k) = u(i, 0) * v(j, 0) * w(k, 0);
    for (int mode = 1; mode <= 3; ++mode) {
        auto s = sctr::svd(sctr::unfold(t, mode)).s;
        ASSERT_GT(s(0), 1e-8);
        for (int r = 1; r < s.size(); ++r) EXPECT_LT(s(r), 1e-10 * s(0));
    }
}

TEST(Unfold, InvalidModeThrows) {
    DenseTensor3<double> t(2, 2, 2);
    EXPECT_THROW(sctr::unfold(t, 0), sctr::ArgumentError);
    EXPECT_THROW(sctr::unfold(t, 4), sctr::ArgumentError);
}

TEST(ModeProduct, IdentityLeavesTensor) {
    auto& gen = testutil::rng(15);
    auto t = testutil::random_tensor(gen, 3, 4, 2);
    Matrix<double> eye = Matrix<double>::Identity(3, 3);
    auto out = sctr::mode_n_product(t, eye, 1);
    for (std::size_t n = 0; n < t.size(); ++n) EXPECT_NEAR(out.data[n], t.data[n], 1e-14);
}

TEST(ModeProduct, ScaledIdentityDoubles) {
    auto& gen = testutil::rng(16);
    auto t = testutil::random_tensor(gen, 3, 4, 2);
    Matrix<double> m = 2.0 * Matrix<double>::Identity(3, 3);
    auto out = sctr::mode_n_product(t, m, 1);
    for (std::size_t n = 0; n < t.size(); ++n)
        EXPECT_NEAR(out.data[n], 2.0 * t.data[n], 1e-14);
}

TEST(ModeProduct, MatchesTripleLoopOracle) {
    auto& gen = testutil::rng(17);
    auto t = testutil::random_tensor(gen, 3, 3, 3);
    auto m = testutil::random_matrix(gen, 2, 3);
    auto out = sctr::mode_n_product(t, m, 2);
    ASSERT_EQ(out.i1, 3);
    ASSERT_EQ(out.i2, 2);
    ASSERT_EQ(out.i3, 3);
    for (int i = 0; i < 3; ++i)
        for (int p = 0; p < 2; ++p)
            for (int k = 0; k < 3; ++k) {
                double want = 0.0;
                for (int j = 0; j < 3; ++j) want += t(i, j, k) * m(p, j);
                EXPECT_NEAR(out(i, p, k), want, 1e-12);
            }
}

TEST(ModeProduct, CompositionAssociativity) {
    auto& gen = testutil::rng(18);
    auto t = testutil::random_tensor(gen, 4, 3, 2);
    for (int mode = 1; mode <= 3; ++mode) {
        int n = t.dim(mode);
        auto a = testutil::random_matrix(gen, 5, n);
        auto b = testutil::random_matrix(gen, 3, 5);
        auto lhs = sctr::mode_n_product(sctr::mode_n_product(t, a, mode), b, mode);
        Matrix<double> ba = b * a;
        auto rhs = sctr::mode_n_product(t, ba, mode);
        for (std::size_t i = 0; i < lhs.size(); ++i)
            EXPECT_NEAR(lhs.data[i], rhs.data[i], 1e-10);
    }
}

TEST(ModeProduct, DistinctModesCommute) {
    auto& gen = testutil::rng(19);
    auto t = testutil::random_tensor(gen, 4, 3, 2);
    auto a = testutil::random_matrix(gen, 5, 4);
    auto b = testutil::random_matrix(gen, 6, 3);
    auto lhs = sctr::mode_n_product(sctr::mode_n_product(t, a, 1), b, 2);
    auto rhs = sctr::mode_n_product(sctr::mode_n_product(t, b, 2), a, 1);
    ASSERT_TRUE(lhs.same_shape(rhs));
    for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs.data[i], rhs.data[i], 1e-10);
}

TEST(ModeProduct, DimensionMismatchThrows) {
    DenseTensor3<double> t(3, 4, 2);
    Matrix<double> m = Matrix<double>::Zero(2, 5);
    EXPECT_THROW(sctr::mode_n_product(t, m, 1), sctr::ArgumentError);
}

TEST(Tucker, ZeroCoreGivesZeroTensor) {
    auto& gen = testutil::rng(20);
    sctr::CoreTensor3<double> core(2, 2, 2);
    auto u = testutil::random_matrix(gen, 4, 2);
    auto v = testutil::random_matrix(gen, 5, 2);
    auto w = testutil::random_matrix(gen, 3, 2);
    auto x = sctr::tucker_compose(core, u, v, w);
    for (double val : x.data) EXPECT_EQ(val, 0.0);
}

TEST(Tucker, RankOneIsOuterProduct) {
    auto& gen = testutil::rng(21);
    sctr::CoreTensor3<double> core(1, 1, 1);
    core(0, 0, 0) = 1.0;
    auto u = testutil::random_matrix(gen, 4, 1);
    auto v = testutil::random_matrix(gen, 5, 1);
    auto w = testutil::random_matrix(gen, 3, 1);
    auto x = sctr::tucker_compose(core, u, v, w);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 3; ++k)
                EXPECT_NEAR(x(i, j, k), u(i, 0) * v(j, 0) * w(k, 0), 1e-14);
}

TEST(Tucker, MatchesQuadrupleSumOracle) {
    auto& gen = testutil::rng(22);
    auto core = testutil::random_tensor(gen, 2, 3, 2);
    auto u = testutil::random_matrix(gen, 5, 2);
    auto v = testutil::random_matrix(gen, 4, 3);
    auto w = testutil::random_matrix(gen, 6, 2);
    auto x = sctr::tucker_compose(core, u, v, w);
    ASSERT_EQ(x.i1, 5);
    ASSERT_EQ(x.i2, 4);
    ASSERT_EQ(x.i3, 6);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 6; ++k) {
                double want = 0.0;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 3; ++b)
                        for (int c = 0; c < 2; ++c)
                            want += core(a, b, c) * u(i, a) * v(j, b) * w(k, c);
                EXPECT_NEAR(x(i, j, k), want, 1e-10);
            }
}

TEST(Tucker, RankMismatchThrows) {
    sctr::CoreTensor3<double> core(2, 2, 2);
    Matrix<double> u = Matrix<double>::Zero(4, 3);
    Matrix<double> v = Matrix<double>::Zero(5, 2);
    Matrix<double> w = Matrix<double>::Zero(3, 2);
    EXPECT_THROW(sctr::tucker_compose(core, u, v, w), sctr::ArgumentError);
}

TEST(Svd, DiagonalCase) {
    Matrix<double> m = Matrix<double>::Zero(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = 1.0;
    auto r = sctr::svd(m);
    ASSERT_EQ(r.s.size(), 2);
    EXPECT_NEAR(r.s(0), 3.0, 1e-12);
    EXPECT_NEAR(r.s(1), 1.0, 1e-12);
}

TEST(Svd, ZeroMatrix) {
    Matrix<double> m = Matrix<double>::Zero(4, 3);
    auto r = sctr::svd(m);
    for (int i = 0; i < r.s.size(); ++i) EXPECT_EQ(r.s(i), 0.0);
}

TEST(Svd, ReconstructionResidual) {
    auto& gen = testutil::rng(23);
    auto m = testutil::random_matrix(gen, 8, 5);
    auto r = sctr::svd(m);
    Matrix<double> back = r.u * r.s.asDiagonal() * r.v.transpose();
    EXPECT_LT((back - m).norm() / m.norm(), 1e-8);
    for (int i = 1; i < r.s.size(); ++i) EXPECT_LE(r.s(i), r.s(i - 1));
    for (int i = 0; i < r.s.size(); ++i) EXPECT_GE(r.s(i), 0.0);
}

TEST(Svd, NonFiniteInputThrows) {
    Matrix<double> m = Matrix<double>::Zero(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(sctr::svd(m), sctr::NumericError);
}

TEST(Svt, DiagonalShrinkage) {
    Matrix<double> m = Matrix<double>::Zero(2, 2);
    m(0, 0) = 3.0;
    m(1, 1) = 1.0;
    auto out = sctr::svt(m, 2.0);
    EXPECT_NEAR(out(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(out(1, 1), 0.0, 1e-12);
    EXPECT_NEAR(out(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(out(1, 0), 0.0, 1e-12);
}

TEST(Svt, TauZeroIsIdentity) {
    auto& gen = testutil::rng(24);
    auto m = testutil::random_matrix(gen, 5, 4);
    auto out = sctr::svt(m, 0.0);
    EXPECT_LT((out - m).norm() / m.norm(), 1e-8);
}

TEST(Svt, SpectrumOracleAtSigmaMax) {
    auto& gen = testutil::rng(25);
    auto m = testutil::random_matrix(gen, 6, 4);
    auto s = sctr::svd(m).s;
    double tau = s(0);
    auto out = sctr::svt(m, tau);
    double want = 0.0;
    for (int i = 0; i < s.size(); ++i) want += std::max(s(i) - tau, 0.0);
    EXPECT_NEAR(sctr::nuclear_norm(out), want, 1e-9);
}

TEST(Svt, ContractionInNuclearNorm) {
    auto& gen = testutil::rng(26);
    for (int trial = 0; trial < 10; ++trial) {
        auto m = testutil::random_matrix(gen, 6, 5);
        double before = sctr::nuclear_norm(m);
        for (double tau : {0.0, 0.1, 0.5, 2.0})
            EXPECT_LE(sctr::nuclear_norm(sctr::svt(m, tau)), before + 1e-9);
    }
}

TEST(Svt, NegativeTauThrows) {
    Matrix<double> m = Matrix<double>::Zero(2, 2);
    EXPECT_THROW(sctr::svt(m, -1.0), sctr::ArgumentError);
}
