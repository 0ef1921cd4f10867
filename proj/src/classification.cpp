#include "sforge/classification.hpp"

#include <cmath>
#include <limits>

#include "sforge/errors.hpp"

namespace sforge {

std::string to_string(OutOfScopeReason reason) {
    switch (reason) {
        case OutOfScopeReason::Subcritical: return "Subcritical";
        case OutOfScopeReason::Supercritical: return "Supercritical";
        case OutOfScopeReason::SobolevCritical: return "Sobolev-critical";
        case OutOfScopeReason::NonSuperlinear: return "NonSuperlinear";
    }
    return "unknown";
}

std::string regime_name(const Regime& regime) {
    switch (regime.index()) {
        case 0: return "two_real_roots";
        case 1: return "double_root";
        case 2: return "complex_roots";
        default: return "out_of_scope";
    }
}

Classification classify(double q_f, double N, bool experimental) {
    if (!(N > 2.0) || !std::isfinite(N)) throw DomainError("N must exceed 2");
    if (!experimental && (N < 3.0 || N != std::floor(N))) {
        throw DomainError("N must be an integer >= 3");
    }
    Classification c;
    c.N = N;
    c.q_f = q_f;
    c.p_c = N / (N - 2.0);
    c.p_S = (N + 2.0) / (N - 2.0);
    c.p_star = 1.0 + 4.0 / (N - 4.0 + 2.0 * std::sqrt(N - 1.0));
    if (!(q_f > 1.0) || !std::isfinite(q_f)) {
        c.p_f = std::numeric_limits<double>::infinity();
        c.regime = OutOfScope{OutOfScopeReason::NonSuperlinear};
        return c;
    }
    c.p_f = q_f / (q_f - 1.0);
    c.m = 2.0 / (c.p_f - 1.0);
    c.a = 4.0 / (c.p_f - 1.0) - N + 2.0;
    c.b = 2.0 * N - 4.0 * q_f;

    if (c.p_f <= c.p_c) {
        c.regime = OutOfScope{OutOfScopeReason::Subcritical};
        return c;
    }
    if (std::abs(c.p_f - c.p_S) <= 1e-12 * c.p_S) {
        c.regime = OutOfScope{OutOfScopeReason::SobolevCritical};
        return c;
    }
    if (c.p_f > c.p_S) {
        c.regime = OutOfScope{OutOfScopeReason::Supercritical};
        return c;
    }

    const double disc = c.a * c.a - 4.0 * c.b;
    if (std::abs(disc) <= 1e-12 * c.a * c.a) {
        c.regime = DoubleRoot{c.a / 2.0};
        c.Lambda = c.a / 2.0;
    } else if (disc > 0.0) {
        const double big = 0.5 * (c.a + std::sqrt(disc));
        const double small = 2.0 * c.b / (c.a + std::sqrt(disc));
        c.regime = TwoRealRoots{small, big};
        c.Lambda = small;
    } else {
        c.regime = ComplexRoots{c.a / 2.0, std::sqrt(c.b - c.a * c.a / 4.0)};
        c.Lambda = c.a / 2.0;
    }
    return c;
}

Classification classify(const Nonlinearity& nl, double N, bool experimental) {
    if (nl.is_generic()) {
        const auto est = nl.estimate_qf();
        if (!est.converged) throw NoLimitError("estimate of q_f did not converge");
        return classify(est.q_f, N, experimental);
    }
    return classify(nl.q(), N, experimental);
}

double threshold_rstar(const Classification& cls, double p) {
    if (!cls.in_scope()) throw DomainError("threshold needs an in-scope classification");
    return p - (p - 1.0) * cls.Lambda / 2.0;
}

double threshold_rstar_literal(const Classification& cls, double p) {
    if (!cls.in_scope()) throw DomainError("threshold needs an in-scope classification");
    const double n2 = cls.N - 2.0;
    if (p < cls.p_star) {
        const double t = n2 - 4.0 / (p - 1.0);
        const double disc = t * t - 8.0 * (n2 - 2.0 / (p - 1.0));
        return (p - 1.0) / 4.0 * (n2 - std::sqrt(std::max(disc, 0.0)));
    }
    return (p - 1.0) * n2 / 4.0;
}

}  // namespace sforge
