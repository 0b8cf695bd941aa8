#include <gtest/gtest.h>

#include "sctr/metrics.hpp"
#include "test_util.hpp"

using sctr::DenseTensor3;
using sctr::Matrix;

namespace {

// Oracle SSIM, written independently of the library version: window built as
// an outer product normalized once at the end, moments accumulated in the
// centered form sum w*(x-mu)(y-mu).
double ssim_oracle(const Matrix<double>& x, const Matrix<double>& y, double peak) {
    double g[11];
    for (int i = 0; i < 11; ++i) g[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2.0 * 1.5 * 1.5));
    double wsum = 0.0;
    double w[11][11];
    for (int a = 0; a < 11; ++a)
        for (int b = 0; b < 11; ++b) {
            w[a][b] = g[a] * g[b];
            wsum += w[a][b];
        }
    const double c1 = 0.0001 * peak * peak, c2 = 0.0009 * peak * peak;
    const int vh = static_cast<int>(x.rows()) - 10, vw = static_cast<int>(x.cols()) - 10;
    double total = 0.0;
    for (int r = 0; r < vh; ++r)
        for (int c = 0; c < vw; ++c) {
            double mx = 0, my = 0;
            for (int a = 0; a < 11; ++a)
                for (int b = 0; b < 11; ++b) {
                    mx += w[a][b] * x(r + a, c + b);
                    my += w[a][b] * y(r + a, c + b);
                }
            mx /= wsum;
            my /= wsum;
            double vx = 0, vy = 0, cov = 0;
            for (int a = 0; a < 11; ++a)
                for (int b = 0; b < 11; ++b) {
                    double dx = x(r + a, c + b) - mx;
                    double dy = y(r + a, c + b) - my;
                    vx += w[a][b] * dx * dx;
                    vy += w[a][b] * dy * dy;
                    cov += w[a][b] * dx * dy;
                }
            vx /= wsum;
            vy /= wsum;
            cov /= wsum;
            total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    return total / (static_cast<double>(vh) * vw);
}

double psnr_oracle(const DenseTensor3<double>& a, const DenseTensor3<double>& b, double peak) {
    double acc = 0.0;
    for (int i = 0; i < a.i1; ++i)
        for (int j = 0; j < a.i2; ++j)
            for (int k = 0; k < a.i3; ++k) {
                double d = a(i, j, k) - b(i, j, k);
                acc += d * d;
            }
    double mse = acc / (static_cast<double>(a.i1) * a.i2 * a.i3);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

} // namespace

TEST(Psnr, IdenticalIsInfinite) {
    auto& gen = testutil::rng(31);
    auto t = testutil::random_tensor(gen, 8, 8, 3);
    EXPECT_TRUE(std::isinf(sctr::psnr(t, t, 1.0)));
    EXPECT_GT(sctr::psnr(t, t, 1.0), 0);
}

TEST(Psnr, UnitErrorIsZeroDb) {
    DenseTensor3<double> a(4, 4, 2, 0.0), b(4, 4, 2, 1.0);
    EXPECT_NEAR(sctr::psnr(a, b, 1.0), 0.0, 1e-12);
}

TEST(Psnr, ClosedFormTwentyDb) {
    DenseTensor3<double> a(10, 10, 1, 0.0), b(10, 10, 1, 0.1);
    EXPECT_NEAR(sctr::psnr(a, b, 1.0), 20.0, 1e-10);
}

TEST(Psnr, SymmetricInArguments) {
    auto& gen = testutil::rng(32);
    auto a = testutil::random_tensor(gen, 6, 7, 2);
    auto b = testutil::random_tensor(gen, 6, 7, 2);
    EXPECT_DOUBLE_EQ(sctr::psnr(a, b, 1.0), sctr::psnr(b, a, 1.0));
}

TEST(Psnr, StrictlyDecreasingInMse) {
    DenseTensor3<double> ref(8, 8, 1, 0.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double err = 0.01; err < 0.5; err += 0.05) {
        DenseTensor3<double> est(8, 8, 1, err);
        double p = sctr::psnr(ref, est, 1.0);
        EXPECT_LT(p, prev);
        prev = p;
    }
}

TEST(Psnr, ShapeMismatchThrows) {
    DenseTensor3<double> a(4, 4, 2), b(4, 4, 3);
    EXPECT_THROW(sctr::psnr(a, b, 1.0), sctr::ArgumentError);
}

TEST(Ssim, IdenticalIsOne) {
    auto& gen = testutil::rng(33);
    auto m = testutil::random_matrix(gen, 16, 16, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(sctr::ssim(m, m), 1.0);
}

TEST(Ssim, NegatedStructureIsNegative) {
    auto& gen = testutil::rng(34);
    auto m = testutil::random_matrix(gen, 24, 24, 0.0, 1.0);
    double mean = m.mean();
    Matrix<double> neg = (2.0 * mean - m.array()).matrix();
    EXPECT_LT(sctr::ssim(m, neg), 0.0);
}

TEST(Ssim, RangeOnRandomInputs) {
    auto& gen = testutil::rng(35);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = testutil::random_matrix(gen, 16, 16, -2.0, 2.0);
        auto b = testutil::random_matrix(gen, 16, 16, -2.0, 2.0);
        double s = sctr::ssim(a, b);
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(Ssim, MatchesDirectConvolutionOracle) {
    auto& gen = testutil::rng(36);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = testutil::random_matrix(gen, 32, 32, 0.0, 1.0);
        auto b = testutil::random_matrix(gen, 32, 32, 0.0, 1.0);
        EXPECT_NEAR(sctr::ssim(a, b, 1.0), ssim_oracle(a, b, 1.0), 1e-9);
    }
}

TEST(Ssim, TooSmallImageThrows) {
    Matrix<double> m = Matrix<double>::Zero(10, 16);
    EXPECT_THROW(sctr::ssim(m, m), sctr::ArgumentError);
}

TEST(Ssim, BandAveragedOver3d) {
    auto& gen = testutil::rng(37);
    auto a = testutil::random_tensor(gen, 16, 16, 3, 0.0, 1.0);
    auto b = testutil::random_tensor(gen, 16, 16, 3, 0.0, 1.0);
    double want = 0.0;
    for (int k = 0; k < 3; ++k) want += sctr::ssim(sctr::band(a, k), sctr::band(b, k), 1.0);
    want /= 3.0;
    EXPECT_NEAR(sctr::ssim(a, b, 1.0), want, 1e-14);
}

TEST(Metrics, PsnrMatchesOracleOnRandomPairs) {
    auto& gen = testutil::rng(38);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = testutil::random_tensor(gen, 32, 32, 1, 0.0, 1.0);
        auto b = testutil::random_tensor(gen, 32, 32, 1, 0.0, 1.0);
        EXPECT_NEAR(sctr::psnr(a, b, 1.0), psnr_oracle(a, b, 1.0), 1e-9);
    }
}

TEST(Metrics, ReportAndCsvRow) {
    auto& gen = testutil::rng(39);
    auto a = testutil::random_tensor(gen, 16, 16, 2, 0.0, 1.0);
    auto rep = sctr::compute_metrics(a, a, 1.0);
    EXPECT_TRUE(std::isinf(rep.psnr_db));
    EXPECT_DOUBLE_EQ(rep.ssim, 1.0);
    ASSERT_EQ(rep.per_band_psnr.size(), 2u);
    EXPECT_EQ(rep.peak, 1.0);
    std::string row = sctr::metric_csv_row(rep, "toy", "sctr", 0.2);
    EXPECT_EQ(row, "toy,sctr,0.2,inf,1");
}
