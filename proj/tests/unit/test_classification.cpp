#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sforge/classification.hpp"
#include "sforge/errors.hpp"

using namespace sforge;

namespace {

double q_of(double p) { return p / (p - 1.0); }

}  // namespace

TEST(Classify, TwoRealRootsAtSevenQuarters) {
    const auto c = classify(q_of(1.75), 5);
    EXPECT_NEAR(c.p_c, 5.0 / 3.0, 1e-15);
    EXPECT_NEAR(c.p_star, 1.8, 1e-15);
    EXPECT_NEAR(c.p_S, 7.0 / 3.0, 1e-15);
    EXPECT_NEAR(c.a, 7.0 / 3.0, 1e-14);
    EXPECT_NEAR(c.b, 2.0 / 3.0, 1e-14);
    ASSERT_TRUE(std::holds_alternative<TwoRealRoots>(c.regime));
    const auto r = std::get<TwoRealRoots>(c.regime);
    EXPECT_NEAR(r.lambda1, 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(r.lambda2, 2.0, 1e-14);
    EXPECT_NEAR(c.Lambda, 1.0 / 3.0, 1e-14);
    EXPECT_EQ(regime_name(c.regime), "two_real_roots");
}

TEST(Classify, DoubleRootAtPStar) {
    const auto c = classify(q_of(1.8), 5);
    ASSERT_TRUE(std::holds_alternative<DoubleRoot>(c.regime));
    EXPECT_NEAR(std::get<DoubleRoot>(c.regime).lambda_star, 1.0, 1e-12);
    EXPECT_NEAR(c.a, 2.0, 1e-14);
    EXPECT_NEAR(c.b, 1.0, 1e-14);
}

TEST(Classify, ComplexRootsAtTwo) {
    const auto c = classify(2.0, 5);
    ASSERT_TRUE(std::holds_alternative<ComplexRoots>(c.regime));
    const auto z = std::get<ComplexRoots>(c.regime);
    EXPECT_NEAR(z.a_half, 0.5, 1e-15);
    EXPECT_NEAR(z.k, std::sqrt(7.0) / 2.0, 1e-15);
    EXPECT_NEAR(c.a, 1.0, 1e-15);
    EXPECT_NEAR(c.b, 2.0, 1e-15);
    EXPECT_NEAR(c.Lambda, 0.5, 1e-15);
}

TEST(Classify, OutOfScopeReasons) {
    auto reason = [](double p) {
        const auto c = classify(q_of(p), 5);
        return std::get<OutOfScope>(c.regime).reason;
    };
    EXPECT_EQ(reason(3.0), OutOfScopeReason::Supercritical);
    EXPECT_EQ(reason(1.5), OutOfScopeReason::Subcritical);
    EXPECT_EQ(reason(7.0 / 3.0), OutOfScopeReason::SobolevCritical);
    EXPECT_EQ(to_string(OutOfScopeReason::Supercritical), "Supercritical");
    EXPECT_FALSE(classify(q_of(3.0), 5).in_scope());
}

TEST(Classify, DimensionChecks) {
    EXPECT_THROW((void)classify(2.0, 2.0), DomainError);
    EXPECT_THROW((void)classify(2.0, 4.5), DomainError);
    EXPECT_NO_THROW((void)classify(2.0, 4.5, true));
}

TEST(Classify, RootIdentitiesRandomized) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> Nd(3, 12);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    int checked = 0;
    for (int k = 0; k < 2000 && checked < 400; ++k) {
        const int N = Nd(rng);
        const double pc = N / (N - 2.0), pS = (N + 2.0) / (N - 2.0);
        const double p = pc + u(rng) * (pS - pc);
        const auto c = classify(q_of(p), N);
        if (!c.in_scope()) continue;
        ++checked;
        if (const auto* t = std::get_if<TwoRealRoots>(&c.regime)) {
            EXPECT_NEAR(t->lambda1 + t->lambda2, c.a, 1e-12 * c.a);
            EXPECT_NEAR(t->lambda1 * t->lambda2, c.b, 1e-12 * c.b);
            EXPECT_LT(t->lambda1, t->lambda2);
        } else if (const auto* z = std::get_if<ComplexRoots>(&c.regime)) {
            EXPECT_NEAR(z->a_half * z->a_half + z->k * z->k, c.b, 1e-12 * c.b);
            EXPECT_NEAR(2.0 * z->a_half, c.a, 1e-15);
        }
        EXPECT_GT(c.Lambda, 0.0);
    }
    EXPECT_GT(checked, 100);
}

TEST(Classify, RootsApproachDoubleRootFromBelow) {
    // The root split scales like sqrt(p* - p), so the gap shrinks by 10 per factor 100 in distance.
    const auto star = classify(q_of(1.8), 5);
    const double ls = std::get<DoubleRoot>(star.regime).lambda_star;
    double prev = INFINITY;
    for (double eps : {1e-4, 1e-6, 1e-8}) {
        const auto c = classify(q_of(1.8 - eps), 5);
        ASSERT_TRUE(std::holds_alternative<TwoRealRoots>(c.regime));
        const auto t = std::get<TwoRealRoots>(c.regime);
        const double gap = std::max(std::abs(t.lambda1 - ls), std::abs(t.lambda2 - ls));
        EXPECT_LT(gap, 10.0 * std::sqrt(eps));
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(Threshold, LambdaRelation) {
    EXPECT_NEAR(threshold_rstar(classify(2.0, 5), 2.0), 1.75, 1e-14);
    EXPECT_NEAR(threshold_rstar(classify(q_of(1.75), 5), 1.75), 13.0 / 8.0, 1e-14);
    EXPECT_NEAR(threshold_rstar(classify(q_of(1.8), 5), 1.8), 1.4, 1e-12);
}

TEST(Threshold, LiteralFormula) {
    EXPECT_NEAR(threshold_rstar_literal(classify(2.0, 5), 2.0), 0.75, 1e-14);
    EXPECT_NEAR(threshold_rstar_literal(classify(q_of(1.75), 5), 1.75), 0.25, 1e-12);
}

TEST(Threshold, ModelForcingDichotomy) {
    // int e^{Lambda t} e^{-2(p-r)t/(p-1)} dt over [0, T] stays bounded only for r < r*.
    for (double p : {1.75, 1.8, 2.0}) {
        const auto c = classify(q_of(p), 5);
        const double rs = threshold_rstar(c, p);
        auto growth = [&](double r) { return c.Lambda - 2.0 * (p - r) / (p - 1.0); };
        EXPECT_LT(growth(rs - 1e-3), 0.0);
        EXPECT_GT(growth(rs + 1e-3), 0.0);
        EXPECT_NEAR(growth(rs), 0.0, 1e-13);
    }
}
