#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sforge/classification.hpp"
#include "sforge/errors.hpp"
#include "sforge/kernels.hpp"

using namespace sforge;

namespace {

const double kE = std::exp(1.0);

Classification two_real() { return classify(1.75 / 0.75, 5); }
Classification double_root() { return classify(1.8 / 0.8, 5); }
Classification complex_roots() { return classify(2.0, 5); }

std::vector<Classification> all_regimes() { return {two_real(), double_root(), complex_roots()}; }

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST(FundamentalPair, Examples) {
    const KernelSet tr(two_real());
    auto f = tr.fundamental_pair(0.0);
    EXPECT_DOUBLE_EQ(f.phi1, 1.0);
    EXPECT_DOUBLE_EQ(f.phi2, 1.0);
    EXPECT_NEAR(f.dphi1, -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(f.dphi2, -2.0, 1e-14);

    const KernelSet dr(double_root());
    f = dr.fundamental_pair(1.0);
    EXPECT_NEAR(f.phi1, 1.0 / kE, 1e-14);
    EXPECT_NEAR(f.phi2, 1.0 / kE, 1e-14);
    EXPECT_NEAR(f.dphi1, -1.0 / kE, 1e-14);
    EXPECT_NEAR(f.dphi2, 0.0, 1e-14);

    const KernelSet cr(complex_roots());
    f = cr.fundamental_pair(0.0);
    EXPECT_DOUBLE_EQ(f.phi1, 1.0);
    EXPECT_DOUBLE_EQ(f.phi2, 0.0);
    EXPECT_NEAR(f.dphi1, -0.5, 1e-15);
    EXPECT_NEAR(f.dphi2, std::sqrt(7.0) / 2.0, 1e-15);
}

TEST(FundamentalPair, SolvesHomogeneousEquationAndWronskian) {
    for (const auto& c : all_regimes()) {
        const KernelSet ks(c);
        for (double rho : {0.3, 2.0, 7.5}) {
            const auto f = ks.fundamental_pair(rho);
            const double h = 1e-4;
            const auto l = ks.fundamental_pair(rho - h), r = ks.fundamental_pair(rho + h);
            const double d2 = (r.dphi1 - l.dphi1) / (2 * h);
            EXPECT_NEAR(d2 + c.a * f.dphi1 + c.b * f.phi1, 0.0, 1e-7);
            EXPECT_NEAR(ks.wronskian(rho), f.phi1 * f.dphi2 - f.phi2 * f.dphi1,
                        1e-13 * std::abs(ks.wronskian(rho)));
        }
    }
}

TEST(Kernel, ExampleValues) {
    const KernelSet tr(two_real());
    EXPECT_NEAR(tr.kernel_values(2.0, 1.0).K, (std::exp(-1.0 / 3.0) - std::exp(-2.0)) / (5.0 / 3.0),
                1e-14);
    EXPECT_NEAR(tr.kernel_values(2.0, 1.0).K, 0.3487176, 1e-7);
    const KernelSet dr(double_root());
    EXPECT_NEAR(dr.kernel_values(2.0, 1.0).K, 1.0 / kE, 1e-12);
    EXPECT_NEAR(dr.super_kernel(2.0, 1.0), 2.0 / kE, 1e-12);
    EXPECT_NEAR(dr.super_kernel(2.0, 1.0), 0.7357589, 1e-7);
}

TEST(Kernel, NormalizationRandomRho) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-20.0, 60.0);
    for (const auto& c : all_regimes()) {
        const KernelSet ks(c);
        EXPECT_NEAR(ks.K()(0.0), 0.0, 1e-14);
        EXPECT_NEAR(ks.dK()(0.0), 1.0, 1e-14);
        for (int k = 0; k < 100; ++k) {
            const double rho = u(rng);
            const auto v = ks.kernel_values(rho, rho);
            EXPECT_NEAR(v.K, 0.0, 1e-14);
            EXPECT_NEAR(v.dK, 1.0, 1e-14);
            EXPECT_EQ(ks.super_kernel(rho, rho), 1.0);
        }
    }
}

TEST(Kernel, OrderViolationThrows) {
    const KernelSet ks(complex_roots());
    EXPECT_THROW((void)ks.kernel_values(1.0, 2.0), OrderError);
    EXPECT_THROW((void)ks.super_kernel(1.0, 2.0), OrderError);
    EXPECT_THROW((void)ks.weight_P(0.5, 0.1), OrderError);
    EXPECT_THROW(KernelSet(classify(3.0 / 2.0, 5)), DomainError);
}

TEST(Kernel, WeightPIsQInLogVariables) {
    const KernelSet ks(double_root());
    EXPECT_NEAR(ks.weight_P(std::exp(-2.0), std::exp(-1.0)), ks.super_kernel(2.0, 1.0), 1e-14);
}

TEST(Kernel, BoundedBySuperKernel) {
    for (const auto& c : all_regimes()) {
        const KernelSet ks(c);
        double worst = 0.0;
        for (int i = 0; i <= 3000; ++i) {
            const double d = 0.01 * i;
            const auto v = ks.kernel_values(d, 0.0);
            worst = std::max(worst, (std::abs(v.K) + std::abs(v.dK)) / ks.super_kernel(d, 0.0));
        }
        EXPECT_TRUE(std::isfinite(worst));
        EXPECT_LT(worst, 10.0);
    }
}

TEST(Kernel, DerivativeKernelMatchesDifference) {
    for (const auto& c : all_regimes()) {
        const KernelSet ks(c);
        for (double d : {0.5, 3.0, 9.0}) {
            const double h = 1e-5;
            const double fd = (ks.K()(d + h) - ks.K()(d - h)) / (2 * h);
            EXPECT_NEAR(ks.dK()(d), fd, 1e-9);
        }
    }
}

TEST(Homogeneous, CoefficientsExample) {
    const KernelSet ks(two_real());
    const auto z = ks.homogeneous_coeffs(0.0, 0.0, 0.0);
    EXPECT_EQ(z.C1, 0.0);
    EXPECT_EQ(z.C2, 0.0);
    const auto c = ks.homogeneous_coeffs(0.0, 0.01, 0.005);
    EXPECT_NEAR(c.C1, 0.015, 1e-15);
    EXPECT_NEAR(c.C2, -0.005, 1e-15);
    EXPECT_NEAR(c.C1 + c.C2, 0.01, 1e-15);
    EXPECT_NEAR(-c.C1 / 3.0 - 2.0 * c.C2, 0.005, 1e-15);
}

TEST(Homogeneous, ReconstructsBoundaryDataExactly) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1e-2);
    for (const auto& c : all_regimes()) {
        const KernelSet ks(c);
        for (int k = 0; k < 50; ++k) {
            const double alpha = u(rng), beta = u(rng);
            const auto v = ks.homogeneous(0.0, alpha, beta);
            EXPECT_EQ(v.K, alpha);
            EXPECT_EQ(v.dK, beta);
        }
    }
}

TEST(Homogeneous, AgreesWithFundamentalCombination) {
    for (const auto& c : all_regimes()) {
        const KernelSet ks(c);
        const double rho0 = 2.0, alpha = 3e-3, beta = 1e-3;
        const auto co = ks.homogeneous_coeffs(rho0, alpha, beta);
        for (double d : {0.0, 1.0, 5.0, 12.0}) {
            const auto f = ks.fundamental_pair(rho0 + d);
            const auto v = ks.homogeneous(d, alpha, beta);
            EXPECT_NEAR(v.K, co.C1 * f.phi1 + co.C2 * f.phi2, 1e-15);
            EXPECT_NEAR(v.dK, co.C1 * f.dphi1 + co.C2 * f.dphi2, 1e-15);
        }
    }
}

TEST(Convolution, ZeroForcing) {
    const KernelSet ks(complex_roots());
    const auto c = ks.convolve_cumulative(0.01, std::vector<double>(100, 0.0));
    EXPECT_EQ(max_abs(c.K), 0.0);
    EXPECT_EQ(max_abs(c.dK), 0.0);
}

TEST(Convolution, ConstantForcingClosedForm) {
    const KernelSet ks(two_real());
    const std::size_t M = 2001;
    const double h = 1.0 / (M - 1);
    const auto c = ks.convolve_cumulative(h, std::vector<double>(M, 1.0));
    const double exact = (3.0 * (1.0 - std::exp(-1.0 / 3.0)) - 0.5 * (1.0 - std::exp(-2.0))) / (5.0 / 3.0);
    EXPECT_NEAR(exact, 0.2508442, 1e-7);
    EXPECT_NEAR(c.K.back(), exact, 1e-7);
}

TEST(Convolution, ConstantForcingSteadyState) {
    for (const auto& cls : all_regimes()) {
        const KernelSet ks(cls);
        const std::size_t M = 320001;
        const double h = 80.0 / (M - 1);
        const auto c = ks.convolve_cumulative(h, std::vector<double>(M, 1.0));
        EXPECT_NEAR(c.K.back(), 1.0 / cls.b, 1e-8) << regime_name(cls.regime);
        EXPECT_NEAR(c.dK.back(), 0.0, 1e-7);
    }
}

TEST(Convolution, SolvesForcedEquation) {
    // y'' + a y' + b y = g with y(0) = y'(0) = 0, checked with centered differences of y'.
    const std::size_t M = 10001;
    const double h = 1e-3;
    for (const auto& cls : all_regimes()) {
        const KernelSet ks(cls);
        for (int kind = 0; kind < 2; ++kind) {
            std::vector<double> g(M);
            for (std::size_t i = 0; i < M; ++i) {
                const double x = i * h;
                g[i] = kind == 0 ? 1.0 + x - 0.1 * x * x : std::sin(x) + 0.5 * std::cos(0.5 * x);
            }
            const auto c = ks.convolve_cumulative(h, g);
            EXPECT_EQ(c.K[0], 0.0);
            EXPECT_EQ(c.dK[0], 0.0);
            double worst = 0.0;
            for (std::size_t i = 1; i + 1 < M; ++i) {
                const double d2 = (c.dK[i + 1] - c.dK[i - 1]) / (2 * h);
                worst = std::max(worst, std::abs(d2 + cls.a * c.dK[i] + cls.b * c.K[i] - g[i]));
            }
            EXPECT_LE(worst, 1e-6 * max_abs(g)) << regime_name(cls.regime) << " kind " << kind;
        }
    }
}

TEST(Convolution, RecurrenceMatchesDirectTrapezoid) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    for (const auto& cls : all_regimes()) {
        const KernelSet ks(cls);
        for (std::size_t M : {2u, 17u, 1024u, 4096u}) {
            std::vector<double> g(M);
            for (auto& x : g) x = n(rng);
            const double h = 30.0 / static_cast<double>(std::max<std::size_t>(M - 1, 1));
            const auto fast = ks.convolve_cumulative(h, g);
            const auto slow = ks.convolve_direct(h, g);
            // Scale by the size of a single trapezoid contribution as well, so that nearly
            // cancelling sums on tiny grids are not judged by their own magnitude.
            const double unit = h * max_abs(g);
            const double scaleK = std::max(max_abs(slow.K), unit);
            const double scaleD = std::max(max_abs(slow.dK), unit);
            for (std::size_t i = 0; i < M; ++i) {
                EXPECT_NEAR(fast.K[i], slow.K[i], 1e-12 * scaleK);
                EXPECT_NEAR(fast.dK[i], slow.dK[i], 1e-12 * scaleD);
            }
            const auto q = ks.convolve_Q(h, g);
            const auto qd = ks.Q().convolve_direct(h, g);
            for (std::size_t i = 0; i < M; ++i) {
                EXPECT_NEAR(q[i], qd[i], 1e-12 * std::max(max_abs(qd), unit));
            }
        }
    }
}

TEST(Convolution, RecurrenceTimeIsLinear) {
    const KernelSet ks(complex_roots());
    // Sizes are interleaved within each repetition so background load hits all of them alike.
    std::vector<std::size_t> sizes;
    for (std::size_t M = 1u << 13; M <= (1u << 17); M <<= 1) sizes.push_back(M);
    std::vector<double> best(sizes.size(), INFINITY);
    for (int rep = 0; rep < 11; ++rep) {
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            const std::size_t M = sizes[k];
            const std::vector<double> g(M, 1.0);
            const auto t0 = std::chrono::steady_clock::now();
            const auto c = ks.convolve_cumulative(40.0 / (M - 1), g);
            const auto t1 = std::chrono::steady_clock::now();
            ASSERT_EQ(c.K.size(), M);
            best[k] = std::min(best[k], std::chrono::duration<double>(t1 - t0).count());
        }
    }
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        xs.push_back(std::log(static_cast<double>(sizes[k])));
        ys.push_back(std::log(best[k]));
    }
    const double xm = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double ym = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - xm) * (ys[i] - ym);
        sxx += (xs[i] - xm) * (xs[i] - xm);
    }
    EXPECT_NEAR(sxy / sxx, 1.0, 0.15);
}
