#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sforge/classification.hpp"
#include "sforge/errors.hpp"
#include "sforge/kernels.hpp"
#include "sforge/profile.hpp"
#include "sforge/solver.hpp"

using namespace sforge;

namespace {

struct Problem {
    Nonlinearity nl;
    Classification cls;
    ProfileContext ctx;
    KernelSet ks;

    Problem(Nonlinearity n, double rho0, double span, std::size_t M)
        : nl(std::move(n)),
          cls(classify(nl, 5)),
          ctx(build_context(nl, cls, rho0, rho0 + span, M)),
          ks(cls) {}
};

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(ApplyT, PurePowerTrivialFixedPoint) {
    Problem s(Nonlinearity(PurePower{2.0}), 3.0, 40.0, 1024);
    const auto phi = homogeneous_part(s.ctx, s.ks, 0.0, 0.0);
    const std::vector<double> z(1024, 0.0);
    const auto t = apply_T(s.ctx, s.ks, phi, z, z);
    EXPECT_EQ(sup_diff(t.value, z), 0.0);
    EXPECT_EQ(sup_diff(t.derivative, z), 0.0);
}

TEST(ApplyT, BoundaryDataForAnyInput) {
    Problem s(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 40.0, 1024);
    const auto phi = homogeneous_part(s.ctx, s.ks, 2e-3, 7e-4);
    std::vector<double> e(1024), de(1024);
    for (std::size_t i = 0; i < 1024; ++i) {
        e[i] = 0.01 * std::sin(0.3 * i);
        de[i] = 0.02 * std::cos(0.1 * i);
    }
    const auto t = apply_T(s.ctx, s.ks, phi, e, de);
    EXPECT_EQ(t.value[0], 2e-3);
    EXPECT_EQ(t.derivative[0], 7e-4);
}

TEST(Picard, PurePowerZeroDataIsTrivial) {
    Problem s(Nonlinearity(PurePower{2.0}), 3.0, 40.0, 1024);
    const auto sol = picard_solve(s.ctx, s.ks, 0.0, 0.0);
    EXPECT_EQ(sol.iterations, 1);
    EXPECT_EQ(sup_diff(sol.eta, std::vector<double>(1024, 0.0)), 0.0);
}

TEST(Picard, PowerSumContracts) {
    Problem s(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 40.0, 4096);
    const auto sol = picard_solve(s.ctx, s.ks, 1e-3, 1e-3);
    EXPECT_TRUE(sol.converged());
    EXPECT_LT(sol.contraction_ratio, 0.9);
    EXPECT_LE(sol.iterations, 60);
    EXPECT_LE(sol.weighted_norm, 2.0);
    EXPECT_EQ(sol.eta[0], 1e-3);
    EXPECT_EQ(sol.eta_prime[0], 1e-3);
}

TEST(Picard, FixedPointResidualBelowTolerance) {
    Problem s(Nonlinearity(PowerSum{2.0, 1.5}), 3.0, 40.0, 2048);
    SolverOptions opts;
    opts.tol = 1e-11;
    const auto sol = picard_solve(s.ctx, s.ks, 5e-4, 1e-3, opts);
    const auto phi = homogeneous_part(s.ctx, s.ks, 5e-4, 1e-3);
    const auto t = apply_T(s.ctx, s.ks, phi, sol.eta, sol.eta_prime);
    // One more step moves the iterate by at most ratio * last change.
    EXPECT_LT(sup_diff(t.value, sol.eta) + sup_diff(t.derivative, sol.eta_prime), opts.tol);
}

TEST(Picard, HomogeneousExactness) {
    Problem s(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 30.0, 2048);
    SolverOptions opts;
    opts.terms = TermMask{false, false, false};
    const double alpha = 3e-3, beta = 1e-3;
    const auto sol = picard_solve(s.ctx, s.ks, alpha, beta, opts);
    const auto c = s.ks.homogeneous_coeffs(s.ctx.grid.rho0, alpha, beta);
    for (std::size_t i = 0; i < s.ctx.size(); ++i) {
        const auto f = s.ks.fundamental_pair(s.ctx.rho[i]);
        EXPECT_NEAR(sol.eta[i], c.C1 * f.phi1 + c.C2 * f.phi2, 1e-12);
        EXPECT_NEAR(sol.eta_prime[i], c.C1 * f.dphi1 + c.C2 * f.dphi2, 1e-12);
    }
}

TEST(Picard, NegativeDataRejected) {
    Problem s(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 20.0, 256);
    EXPECT_THROW((void)picard_solve(s.ctx, s.ks, -1e-3, 0.0), DomainError);
}

TEST(Picard, HugeDataFailsWithDiagnostics) {
    Problem s(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 20.0, 512);
    const auto sol = picard_iterate(s.ctx, s.ks, 5.0, 5.0);
    EXPECT_FALSE(sol.converged());
    EXPECT_FALSE(sol.message.empty());
    EXPECT_THROW((void)picard_solve(s.ctx, s.ks, 5.0, 5.0), ConvergenceError);
}

TEST(WeightedNorm, ZeroAndEnvelope) {
    Problem s(Nonlinearity(PurePower{2.0}), 3.0, 20.0, 256);
    RemainderSolution sol;
    sol.eta.assign(256, 0.0);
    sol.eta_prime.assign(256, 0.0);
    EXPECT_EQ(weighted_norm(sol, s.ctx, s.ks, 1e-3), 0.0);
    for (std::size_t i = 0; i < 256; ++i) {
        sol.eta[i] = 1e-3 * s.ks.super_kernel(s.ctx.rho[i], s.ctx.grid.rho0);
    }
    EXPECT_NEAR(weighted_norm(sol, s.ctx, s.ks, 1e-3), 1.0, 1e-12);
    EXPECT_THROW((void)weighted_norm(sol, s.ctx, s.ks, 0.0), DomainError);
    EXPECT_EQ(default_delta(1e-3, 1e-3), 8e-3);
    EXPECT_EQ(default_delta(0.0, 0.0), 1e-6);
}

TEST(CaseTag, Examples) {
    Problem pure(Nonlinearity(PurePower{2.0}), 3.0, 60.0, 2048);
    EXPECT_EQ(case_classify(pure.ctx, pure.cls.Lambda).tag, "A");
    Problem fast(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 60.0, 2048);
    EXPECT_EQ(case_classify(fast.ctx, fast.cls.Lambda).tag, "A");
    Problem slow(Nonlinearity(PowerSum{2.0, 1.9}), 3.0, 60.0, 2048);
    EXPECT_EQ(case_classify(slow.ctx, slow.cls.Lambda).tag, "B");
    Problem tiny(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 4.0, 64);
    EXPECT_THROW((void)case_classify(tiny.ctx, tiny.cls.Lambda), InconclusiveError);
}

TEST(SelectRho0, PurePowerReturnsInitial) {
    const Nonlinearity nl(PurePower{2.0});
    const auto cls = classify(nl, 5);
    EXPECT_EQ(select_rho0(nl, cls, 5e-3, 5e-3, GridSpec{3.0, 40.0, 1024}), 3.0);
}

TEST(SelectRho0, ReturnedValueConverges) {
    for (double r : {1.0, 1.9}) {
        const Nonlinearity nl(PowerSum{2.0, r});
        const auto cls = classify(nl, 5);
        const GridSpec g{-3.0, 40.0, 2048};
        const double rho0 = select_rho0(nl, cls, 1e-3, 1e-3, g);
        EXPECT_GE(rho0, g.rho0);
        const auto ctx = build_context(nl, cls, rho0, rho0 + g.span, g.M);
        EXPECT_TRUE(picard_iterate(ctx, KernelSet(cls), 1e-3, 1e-3).converged()) << "r=" << r;
    }
}

TEST(SelectRho0, HugeDataHasNoContraction) {
    const Nonlinearity nl(PowerSum{2.0, 1.0});
    EXPECT_THROW((void)select_rho0(nl, classify(nl, 5), 5.0, 5.0, GridSpec{3.0, 40.0, 512}),
                 NoContractionError);
}

TEST(Sweep, TenPairsDistinctAndIndependentOfWorkers) {
    Problem s(Nonlinearity(PowerSum{2.0, 1.0}), 3.0, 40.0, 2048);
    std::vector<std::pair<double, double>> pairs;
    for (int k = 0; k < 10; ++k) pairs.emplace_back(1e-4 * (1 + k), 1e-3 - 1e-4 * k);
    const auto one = sweep(s.ctx, s.ks, pairs, {}, 1);
    const auto many = sweep(s.ctx, s.ks, pairs, {}, 4);
    EXPECT_EQ(one.converged, 10u);
    EXPECT_TRUE(one.boundary_distinct);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(one.solutions[i].eta, many.solutions[i].eta);
        for (std::size_t j = 0; j < 10; ++j) {
            EXPECT_EQ(std::abs(one.solutions[i].eta[0] - one.solutions[j].eta[0]),
                      std::abs(pairs[i].first - pairs[j].first));
            EXPECT_EQ(std::abs(one.solutions[i].eta_prime[0] - one.solutions[j].eta_prime[0]),
                      std::abs(pairs[i].second - pairs[j].second));
            if (i != j) EXPECT_GT(one.separation[i][j], 0.0);
        }
    }
}

TEST(Sweep, PurePowerZeroPairIsTrivial) {
    Problem s(Nonlinearity(PurePower{2.0}), 3.0, 40.0, 512);
    const auto res = sweep(s.ctx, s.ks, {{0.0, 0.0}});
    ASSERT_EQ(res.converged, 1u);
    EXPECT_EQ(sup_diff(res.solutions[0].eta, std::vector<double>(512, 0.0)), 0.0);
}
