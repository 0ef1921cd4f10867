#pragma once

#include <string>
#include <variant>

#include "sforge/nonlinearity.hpp"

namespace sforge {

struct TwoRealRoots {
    double lambda1;  ///< smaller root
    double lambda2;
};

struct DoubleRoot {
    double lambda_star;
};

/// Roots a/2 +- i k of the characteristic quadratic.
struct ComplexRoots {
    double a_half;
    double k;
};

enum class OutOfScopeReason { Subcritical, Supercritical, SobolevCritical, NonSuperlinear };

struct OutOfScope {
    OutOfScopeReason reason;
};

using Regime = std::variant<TwoRealRoots, DoubleRoot, ComplexRoots, OutOfScope>;

[[nodiscard]] std::string to_string(OutOfScopeReason reason);
/// "two_real_roots", "double_root", "complex_roots" or "out_of_scope".
[[nodiscard]] std::string regime_name(const Regime& regime);

struct Classification {
    double N = 0.0;
    double q_f = 0.0;
    double p_f = 0.0;
    double m = 0.0;  ///< 2/(p_f - 1)
    double p_c = 0.0;
    double p_S = 0.0;
    double p_star = 0.0;
    double a = 0.0;
    double b = 0.0;
    Regime regime = OutOfScope{OutOfScopeReason::NonSuperlinear};
    double Lambda = 0.0;

    [[nodiscard]] bool in_scope() const noexcept {
        return !std::holds_alternative<OutOfScope>(regime);
    }
};

/// Critical exponents and quadratic coefficients for given (N, q_f).
/// Accepts real N > 2 only when experimental is set; otherwise N must be an integer >= 3.
[[nodiscard]] Classification classify(double q_f, double N, bool experimental = false);

/// Uses the exact q_f of built-in families and the converged estimate for Generic.
/// Throws NoLimitError when the generic estimate did not converge.
[[nodiscard]] Classification classify(const Nonlinearity& nl, double N, bool experimental = false);

/// r* = p - (p-1) Lambda / 2, where the forcing rate 2(p-r)/(p-1) equals Lambda.
[[nodiscard]] double threshold_rstar(const Classification& cls, double p);

/// Piecewise closed form in p and N as it is usually displayed. It does not
/// satisfy the Lambda relation and is reported for comparison only.
[[nodiscard]] double threshold_rstar_literal(const Classification& cls, double p);

}  // namespace sforge
