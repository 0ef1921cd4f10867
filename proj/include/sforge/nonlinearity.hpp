#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace sforge {

// Built-in families. All of them satisfy p_f = p.

/// f(s) = s^p
struct PurePower {
    double p;
};

/// f(s) = s^p + s^r, 0 < r < p
struct PowerSum {
    double p;
    double r;
};

/// f(s) = s^p (log s)^r, s > 2
struct PowerLog {
    double p;
    double r;
};

/// f(s) = s^p exp((log s)^r), 0 < r < 1, s > 2
struct PowerExpLog {
    double p;
    double r;
};

/// f(s) = s^p + s^r (log s)^log_exp, 0 < r < p, s > 2
struct PowerSumLog {
    double p;
    double r;
    double log_exp;
};

/// User supplied f, f', f''. Everything else falls back to quadrature.
struct Generic {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
    double s_min = 0.0;
    std::string label = "generic";
};

using Family = std::variant<PurePower, PowerSum, PowerLog, PowerExpLog, PowerSumLog, Generic>;

struct Derivatives {
    double f;
    double df;
    double d2f;
};

/// Scale-free quantities at s = exp(log_s).
///
/// For the built-in families the two defects are evaluated from integrals of
/// analytically simplified integrands, so they keep full relative precision
/// even when they are many orders of magnitude below q_f.
struct LocalState {
    double log_s = 0.0;
    double log_F = 0.0;
    double fF_over_s = 0.0;         ///< f(s)F(s)/s
    double fF_over_s_defect = 0.0;  ///< f(s)F(s)/s - 1/(p_f-1)
    double dfF_defect = 0.0;        ///< f'(s)F(s) - q_f
};

struct QfEstimate {
    double q_f = 0.0;
    bool converged = false;
    std::vector<double> history;           ///< f'(u)F(u) at u = 10^2 .. 10^8
    std::vector<double> lhopital_history;  ///< f'(u)^2 / (f(u) f''(u)) on the same points
};

/// Truncated asymptotic series for F, f'F - q_f and fF/s - 1/(p-1).
struct SeriesDiagnostics {
    double s = 0.0;
    int terms = 0;
    double F = 0.0;
    double dfF_defect = 0.0;
    double fF_over_s_defect = 0.0;
    double F_first_omitted = 0.0;
    double dfF_first_omitted = 0.0;
    double fF_over_s_first_omitted = 0.0;
    /// Leading correction coefficient of f'F vanishes (p - r = 1).
    bool degenerate_leading_term = false;
    /// First omitted term of F is below 1e-3 of F.
    bool within_validity = true;
};

/// A superlinear nonlinearity f with f, f' > 0 on (s_min, inf), together
/// with its decreasing primitive F(s) = int_s^inf dt / f(t) and inverse.
///
/// Values are immutable after construction and all members are safe for
/// concurrent use.
class Nonlinearity {
public:
    /// Validates the family parameters; throws DomainError on violation.
    explicit Nonlinearity(Family family);

    [[nodiscard]] const Family& family() const noexcept { return family_; }
    /// Config-file identifier: power, power_sum, power_log, power_exp_log,
    /// power_sum_log or the Generic label.
    [[nodiscard]] std::string name() const;
    [[nodiscard]] double s_min() const noexcept { return s_min_; }
    /// p_f; exact for built-in families, estimated for Generic (NaN when the
    /// estimate did not converge).
    [[nodiscard]] double exponent() const noexcept { return p_f_; }
    [[nodiscard]] double q() const noexcept { return q_f_; }
    [[nodiscard]] bool is_generic() const noexcept;
    [[nodiscard]] bool is_pure_power() const noexcept;

    [[nodiscard]] Derivatives evaluate(double s) const;

    [[nodiscard]] double F(double s) const;
    [[nodiscard]] double F_inverse(double sigma) const;
    /// log F^{-1}(sigma); avoids overflow of the inverse itself.
    [[nodiscard]] double log_F_inverse(double sigma) const;

    [[nodiscard]] QfEstimate estimate_qf() const;
    [[nodiscard]] SeriesDiagnostics series_diagnostics(double s, int terms) const;

    [[nodiscard]] LocalState state(double log_s) const;

    /// f(s(1+eta))/f(s) - 1 - (s f'(s)/f(s)) eta at s = exp(log_s).
    [[nodiscard]] double taylor_remainder(double log_s, double eta) const;

    /// Relative position of the lower domain end: 1 + eta must exceed this.
    [[nodiscard]] double min_relative_argument(double log_s) const;

private:
    Family family_;
    double s_min_ = 0.0;
    double p_f_ = 0.0;
    double q_f_ = 0.0;
};

/// Parses a family from its config identifier and parameters.
[[nodiscard]] Nonlinearity make_nonlinearity(const std::string& family, double p, double r,
                                             double log_exp);

}  // namespace sforge
