#include "sforge/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "numeric.hpp"
#include "sforge/errors.hpp"

namespace sforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Each built-in family is written as f(s) = s^p h(s). With x = log s the
// models below expose log h, the elasticity defect e = p - s f'/f and the
// curvature defect c = 1 - q f f''/f'^2 as functions of x.

struct PurePowerModel {
    double p;
    [[nodiscard]] double log_h(double) const { return 0.0; }
    [[nodiscard]] double e(double) const { return 0.0; }
    [[nodiscard]] double c(double) const { return 0.0; }
    [[nodiscard]] double remainder(double, double eta) const {
        return detail::power_remainder(p, eta);
    }
};

struct PowerSumModel {
    double p;
    double r;
    [[nodiscard]] double log_h(double x) const {
        const double t = (r - p) * x;
        return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    [[nodiscard]] double e(double x) const {
        const double t = (r - p) * x;
        const double d = p - r;
        if (t > 0.0) return d / (1.0 + std::exp(-t));
        const double z = std::exp(t);
        return d * z / (1.0 + z);
    }
    [[nodiscard]] double c(double x) const {
        const double t = (r - p) * x;
        const double d = p - r;
        const double one_minus_d = (1.0 - p) + r;
        if (t > 0.0) {
            const double w = std::exp(-t);
            const double den = p * w + r;
            return d * (p * one_minus_d * w + r) / ((p - 1.0) * den * den);
        }
        const double z = std::exp(t);
        const double den = p + r * z;
        return d * z * (p * one_minus_d + r * z) / ((p - 1.0) * den * den);
    }
    [[nodiscard]] double remainder(double x, double eta) const {
        const double t = (r - p) * x;
        const double w = t > 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
        return (1.0 - w) * detail::power_remainder(p, eta) + w * detail::power_remainder(r, eta);
    }
};

// s^p (log s)^r with x > 0.
struct PowerLogModel {
    double p;
    double r;
    [[nodiscard]] double log_h(double x) const { return r * std::log(x); }
    [[nodiscard]] double e(double x) const { return -r / x; }
    [[nodiscard]] double c(double x) const {
        const double q = p / (p - 1.0);
        const double y = r / x;
        const double den = p + y;
        return (-q * y + y * y - q * y * (r - 1.0) / x) / (den * den);
    }
    /// (1+eta)^p (1+l/x)^r - 1 - (p + r/x) eta with l = log(1+eta).
    [[nodiscard]] double remainder(double x, double eta) const {
        const double l = std::log1p(eta);
        const double a = p * l + r * std::log1p(l / x);
        const double a2 = p * detail::log1p_minus(eta) + r * detail::log1p_minus(l / x) +
                          (r / x) * detail::log1p_minus(eta);
        return detail::expm1_minus(a) + a2;
    }
};

// s^p exp((log s)^r) with x > 0.
struct PowerExpLogModel {
    double p;
    double r;
    [[nodiscard]] double log_h(double x) const { return std::pow(x, r); }
    [[nodiscard]] double e(double x) const { return -r * std::pow(x, r - 1.0); }
    [[nodiscard]] double c(double x) const {
        const double q = p / (p - 1.0);
        const double y = r * std::pow(x, r - 1.0);
        const double den = p + y;
        return (-(p + y) * y / (p - 1.0) - q * r * (r - 1.0) * std::pow(x, r - 2.0)) / (den * den);
    }
    [[nodiscard]] double remainder(double x, double eta) const {
        const double l = std::log1p(eta);
        const double xr = std::pow(x, r);
        const double a = p * l + xr * std::expm1(r * std::log1p(l / x));
        const double a2 = (p + r * xr / x) * detail::log1p_minus(eta) +
                          xr * detail::power_remainder(r, l / x);
        return detail::expm1_minus(a) + a2;
    }
};

// s^p + s^r (log s)^beta with x > 0.
struct PowerSumLogModel {
    double p;
    double r;
    double beta;
    [[nodiscard]] double log_v(double x) const { return (r - p) * x + beta * std::log(x); }
    [[nodiscard]] double log_h(double x) const {
        const double t = log_v(x);
        return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    [[nodiscard]] double e(double x) const {
        const double v = std::exp(log_v(x));
        const double k = (r - p) + beta / x;
        return -v * k / (1.0 + v);
    }
    [[nodiscard]] double c(double x) const {
        const double q = p / (p - 1.0);
        const double v = std::exp(log_v(x));
        const double k = (r - p) + beta / x;
        const double one_plus_k = ((1.0 - p) + r) + beta / x;
        const double num = -q * k * one_plus_k - v * (p + k) * k / (p - 1.0) +
                           q * beta * (1.0 + v) / (x * x);
        const double den = p + v * (p + k);
        return v * num / (den * den);
    }
    [[nodiscard]] double remainder(double x, double eta) const {
        const double v = std::exp(log_v(x));
        const double w = v / (1.0 + v);
        const PowerLogModel lower{r, beta};
        return (1.0 - w) * detail::power_remainder(p, eta) + w * lower.remainder(x, eta);
    }
};

/// fF/s - 1/(p-1) and f'F - q in closed form for s^2 + s (u = 1/s).
void power_sum_2_1_defects(double x, double& d2, double& d1) {
    const double u = std::exp(-x);
    if (u < 0.1) {
        d2 = 0.0;
        d1 = 0.0;
        double uk = 1.0;
        for (int k = 1; k < 60; ++k) {
            uk *= -u;
            const double sign_term = -uk;  // (-1)^{k-1} u^k
            const double t2 = sign_term / (k * (k + 1.0));
            d2 += t2;
            if (k >= 2) d1 += -sign_term * (k - 1.0) / (k * (k + 1.0));
            if (std::abs(t2) < 1e-19 * std::abs(d2)) break;
        }
        return;
    }
    const double l = std::log1p(u);
    d2 = (1.0 + u) * l / u - 1.0;
    d1 = (2.0 + u) * l / u - 2.0;
}

template <class Model>
LocalState model_state(const Model& m, double x) {
    const double p = m.p;
    const double gamma = 1.0 / (p - 1.0);
    const double lh = m.log_h(x);
    auto tau_x = [&](double w) { return x - gamma * std::log(w); };
    auto ie = detail::integrate_unit([&](double w) {
        const double xt = tau_x(w);
        return m.e(xt) * std::exp(lh - m.log_h(xt));
    });
    auto ic = detail::integrate_unit([&](double w) {
        const double xt = tau_x(w);
        return m.c(xt) * std::exp(lh - m.log_h(xt));
    });
    LocalState st;
    st.log_s = x;
    st.fF_over_s_defect = gamma * gamma * ie.value;
    st.fF_over_s = gamma + st.fF_over_s_defect;
    st.dfF_defect = gamma * (p - m.e(x)) * ic.value;
    st.log_F = (1.0 - p) * x - lh + std::log(st.fF_over_s);
    return st;
}

double generic_F(const Generic& g, double s) {
    // F(s) = int_0^1 s / (t^2 f(s/t)) dt
    auto res = detail::integrate_unit(
        [&](double t) {
            const double u = s / t;
            return s / (t * t * g.f(u));
        },
        1e-12);
    if (!std::isfinite(res.value) || res.value <= 0.0 ||
        res.error > 1e-10 * std::max(res.value, res.l1)) {
        throw QuadratureError("quadrature for F did not reach tolerance at s=" + std::to_string(s));
    }
    return res.value;
}

bool is_power_sum_2_1(const Family& fam) {
    if (const auto* ps = std::get_if<PowerSum>(&fam)) return ps->p == 2.0 && ps->r == 1.0;
    return false;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw DomainError(msg);
}

double aitken(const std::vector<double>& v) {
    const std::size_t n = v.size();
    const double a0 = v[n - 3], a1 = v[n - 2], a2 = v[n - 1];
    const double d1 = a2 - a1, d0 = a1 - a0;
    const double den = d1 - d0;
    if (den == 0.0 || !std::isfinite(den) || std::abs(den) < 1e-300) return a2;
    const double ext = a2 - d1 * d1 / den;
    return std::isfinite(ext) ? ext : a2;
}

}  // namespace

Nonlinearity::Nonlinearity(Family family) : family_(std::move(family)) {
    std::visit(
        overloaded{
            [&](const PurePower& f) {
                require(f.p > 1.0, "p must exceed 1");
                p_f_ = f.p;
            },
            [&](const PowerSum& f) {
                require(f.p > 1.0, "p must exceed 1");
                require(f.r > 0.0 && f.r < f.p, "r must satisfy 0 < r < p");
                p_f_ = f.p;
            },
            [&](const PowerLog& f) {
                require(f.p > 1.0, "p must exceed 1");
                require(std::isfinite(f.r), "r must be finite");
                s_min_ = 2.0;
                p_f_ = f.p;
            },
            [&](const PowerExpLog& f) {
                require(f.p > 1.0, "p must exceed 1");
                require(f.r > 0.0 && f.r < 1.0, "r must satisfy 0 < r < 1");
                s_min_ = 2.0;
                p_f_ = f.p;
            },
            [&](const PowerSumLog& f) {
                require(f.p > 1.0, "p must exceed 1");
                require(f.r > 0.0 && f.r < f.p, "r must satisfy 0 < r < p");
                require(std::isfinite(f.log_exp), "log_exp must be finite");
                s_min_ = 2.0;
                p_f_ = f.p;
            },
            [&](const Generic& f) {
                require(static_cast<bool>(f.f) && static_cast<bool>(f.df) &&
                            static_cast<bool>(f.d2f),
                        "generic nonlinearity needs f, f' and f''");
                require(f.s_min >= 0.0, "s_min must be non-negative");
                s_min_ = f.s_min;
            },
        },
        family_);

    // f > 0 and f' > 0 on a logarithmic sample of the domain.
    const double base = std::max(s_min_, 1e-6);
    for (int k = 0; k <= 60; ++k) {
        const double s = base * std::pow(10.0, 0.2 * k) + (k == 0 ? 1e-3 : 0.0);
        if (s <= s_min_) continue;
        const auto d = evaluate(s);
        require(std::isfinite(d.f) && d.f > 0.0, "f must be positive on the domain");
        require(std::isfinite(d.df) && d.df > 0.0, "f' must be positive on the domain");
    }

    if (is_generic()) {
        try {
            const auto est = estimate_qf();
            q_f_ = est.q_f;
            p_f_ = est.converged && q_f_ > 1.0 ? q_f_ / (q_f_ - 1.0) : kNaN;
            if (!est.converged) q_f_ = kNaN;
        } catch (const NoLimitError&) {
            q_f_ = kNaN;
            p_f_ = kNaN;
        }
    } else {
        q_f_ = p_f_ / (p_f_ - 1.0);
    }
}

bool Nonlinearity::is_generic() const noexcept { return std::holds_alternative<Generic>(family_); }

bool Nonlinearity::is_pure_power() const noexcept {
    return std::holds_alternative<PurePower>(family_);
}

std::string Nonlinearity::name() const {
    return std::visit(overloaded{
                          [](const PurePower&) -> std::string { return "power"; },
                          [](const PowerSum&) -> std::string { return "power_sum"; },
                          [](const PowerLog&) -> std::string { return "power_log"; },
                          [](const PowerExpLog&) -> std::string { return "power_exp_log"; },
                          [](const PowerSumLog&) -> std::string { return "power_sum_log"; },
                          [](const Generic& g) -> std::string { return g.label; },
                      },
                      family_);
}

Derivatives Nonlinearity::evaluate(double s) const {
    if (!(s > s_min_)) throw DomainError("s must exceed s_min");
    return std::visit(
        overloaded{
            [&](const PurePower& f) -> Derivatives {
                const double sp2 = std::pow(s, f.p - 2.0);
                return {sp2 * s * s, f.p * sp2 * s, f.p * (f.p - 1.0) * sp2};
            },
            [&](const PowerSum& f) -> Derivatives {
                const double a = std::pow(s, f.p - 2.0);
                const double b = std::pow(s, f.r - 2.0);
                return {(a + b) * s * s, (f.p * a + f.r * b) * s,
                        f.p * (f.p - 1.0) * a + f.r * (f.r - 1.0) * b};
            },
            [&](const PowerLog& f) -> Derivatives {
                const double L = std::log(s);
                const double base = std::pow(s, f.p - 2.0) * std::pow(L, f.r);
                const double y = f.r / L;
                return {base * s * s, base * s * (f.p + y),
                        base * (f.p * (f.p - 1.0) + (2.0 * f.p - 1.0) * y +
                                f.r * (f.r - 1.0) / (L * L))};
            },
            [&](const PowerExpLog& f) -> Derivatives {
                const double L = std::log(s);
                const double base = std::pow(s, f.p - 2.0) * std::exp(std::pow(L, f.r));
                const double y = f.r * std::pow(L, f.r - 1.0);
                return {base * s * s, base * s * (f.p + y),
                        base * ((f.p - 1.0 + y) * (f.p + y) +
                                f.r * (f.r - 1.0) * std::pow(L, f.r - 2.0))};
            },
            [&](const PowerSumLog& f) -> Derivatives {
                const double L = std::log(s);
                const double be = f.log_exp;
                const double a = std::pow(s, f.p - 2.0);
                const double b = std::pow(s, f.r - 2.0);
                const double Lb = std::pow(L, be);
                const double Lb1 = std::pow(L, be - 1.0);
                const double Lb2 = std::pow(L, be - 2.0);
                return {a * s * s + b * s * s * Lb, f.p * a * s + b * s * (f.r * Lb + be * Lb1),
                        f.p * (f.p - 1.0) * a +
                            b * (f.r * (f.r - 1.0) * Lb + (2.0 * f.r - 1.0) * be * Lb1 +
                                 be * (be - 1.0) * Lb2)};
            },
            [&](const Generic& g) -> Derivatives { return {g.f(s), g.df(s), g.d2f(s)}; },
        },
        family_);
}

LocalState Nonlinearity::state(double log_s) const {
    if (!(std::exp(log_s) > s_min_) || !(log_s > -700.0) || !std::isfinite(log_s)) {
        throw DomainError("s must exceed s_min");
    }
    if (is_power_sum_2_1(family_)) {
        LocalState st;
        st.log_s = log_s;
        power_sum_2_1_defects(log_s, st.fF_over_s_defect, st.dfF_defect);
        st.fF_over_s = 1.0 + st.fF_over_s_defect;
        const double u = std::exp(-log_s);
        st.log_F = std::log(std::log1p(u));
        return st;
    }
    return std::visit(
        overloaded{
            [&](const PurePower& f) {
                LocalState st;
                st.log_s = log_s;
                st.fF_over_s = 1.0 / (f.p - 1.0);
                st.log_F = (1.0 - f.p) * log_s - std::log(f.p - 1.0);
                return st;
            },
            [&](const PowerSum& f) { return model_state(PowerSumModel{f.p, f.r}, log_s); },
            [&](const PowerLog& f) { return model_state(PowerLogModel{f.p, f.r}, log_s); },
            [&](const PowerExpLog& f) { return model_state(PowerExpLogModel{f.p, f.r}, log_s); },
            [&](const PowerSumLog& f) {
                return model_state(PowerSumLogModel{f.p, f.r, f.log_exp}, log_s);
            },
            [&](const Generic& g) {
                const double s = std::exp(log_s);
                const double F = generic_F(g, s);
                const double f = g.f(s);
                const double df = g.df(s);
                LocalState st;
                st.log_s = log_s;
                st.log_F = std::log(F);
                st.fF_over_s = f * F / s;
                st.fF_over_s_defect = st.fF_over_s - (q_f_ - 1.0);
                st.dfF_defect = df * F - q_f_;
                return st;
            },
        },
        family_);
}

double Nonlinearity::F(double s) const {
    if (!(s > s_min_)) throw DomainError("s must exceed s_min");
    if (const auto* pp = std::get_if<PurePower>(&family_)) {
        return std::pow(s, 1.0 - pp->p) / (pp->p - 1.0);
    }
    if (is_power_sum_2_1(family_)) return std::log1p(1.0 / s);
    if (const auto* g = std::get_if<Generic>(&family_)) return generic_F(*g, s);
    return std::exp(state(std::log(s)).log_F);
}

double Nonlinearity::log_F_inverse(double sigma) const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
    if (const auto* pp = std::get_if<PurePower>(&family_)) {
        return -std::log((pp->p - 1.0) * sigma) / (pp->p - 1.0);
    }
    if (is_power_sum_2_1(family_)) return -std::log(std::expm1(sigma));

    const double log_sigma = std::log(sigma);
    const double x_min = s_min_ > 0.0 ? std::log(s_min_) : -700.0;
    // G(x) = log F(e^x) - log sigma is strictly decreasing.
    auto G = [&](double x, double& slope) {
        const auto st = state(x);
        slope = -1.0 / st.fF_over_s;
        return st.log_F - log_sigma;
    };
    const double pf = std::isfinite(p_f_) ? p_f_ : 2.0;
    double x = -std::log((pf - 1.0) * sigma) / (pf - 1.0);
    if (!(x > x_min)) x = x_min + 1.0;

    double slope = 0.0;
    double g = G(x, slope);
    double lo = x, hi = x;
    double g_lo = g, g_hi = g;
    double step = 1.0;
    int guard = 0;
    while (g_hi > 0.0) {
        lo = hi;
        g_lo = g_hi;
        hi += step;
        step *= 2.0;
        g_hi = G(hi, slope);
        if (++guard > 60) throw ConvergenceError("F inverse: no upper bracket");
    }
    step = 1.0;
    guard = 0;
    while (g_lo < 0.0) {
        hi = lo;
        g_hi = g_lo;
        const double next = lo - step;
        step *= 2.0;
        if (next <= x_min) {
            // Probe just inside the domain; sigma beyond F(s_min) is rejected.
            const double edge = x_min + 1e-9 * std::max(1.0, std::abs(x_min));
            double sl = 0.0;
            const double ge = G(edge, sl);
            if (ge <= 0.0) throw DomainError("sigma must be below F(s_min)");
            lo = edge;
            g_lo = ge;
            break;
        }
        lo = next;
        g_lo = G(lo, slope);
        if (++guard > 60) throw ConvergenceError("F inverse: no lower bracket");
    }
    if (g_lo == 0.0) return lo;
    if (g_hi == 0.0) return hi;

    x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        g = G(x, slope);
        if (g == 0.0) return x;
        if (g > 0.0) lo = x;
        else hi = x;
        double next = x - g / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double dx = std::abs(next - x);
        x = next;
        if (dx <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)) ||
            hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            return x;
        }
    }
    throw ConvergenceError("F inverse: iteration cap reached");
}

double Nonlinearity::F_inverse(double sigma) const {
    if (is_power_sum_2_1(family_)) {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
        return 1.0 / std::expm1(sigma);
    }
    return std::exp(log_F_inverse(sigma));
}

double Nonlinearity::taylor_remainder(double log_s, double eta) const {
    if (!(eta > min_relative_argument(log_s) - 1.0)) {
        throw DomainError("scaled argument leaves the domain");
    }
    return std::visit(overloaded{
                          [&](const PurePower& f) { return PurePowerModel{f.p}.remainder(log_s, eta); },
                          [&](const PowerSum& f) {
                              return PowerSumModel{f.p, f.r}.remainder(log_s, eta);
                          },
                          [&](const PowerLog& f) {
                              return PowerLogModel{f.p, f.r}.remainder(log_s, eta);
                          },
                          [&](const PowerExpLog& f) {
                              return PowerExpLogModel{f.p, f.r}.remainder(log_s, eta);
                          },
                          [&](const PowerSumLog& f) {
                              return PowerSumLogModel{f.p, f.r, f.log_exp}.remainder(log_s, eta);
                          },
                          [&](const Generic& g) {
                              const double s = std::exp(log_s);
                              const double f = g.f(s);
                              return g.f(s * (1.0 + eta)) / f - 1.0 - s * g.df(s) / f * eta;
                          },
                      },
                      family_);
}

double Nonlinearity::min_relative_argument(double log_s) const {
    return s_min_ > 0.0 ? s_min_ * std::exp(-log_s) : 0.0;
}

QfEstimate Nonlinearity::estimate_qf() const {
    QfEstimate out;
    for (int k = 2; k <= 8; ++k) {
        const double u = std::pow(10.0, k);
        const auto d = evaluate(u);
        double dfF = 0.0;
        if (const auto* g = std::get_if<Generic>(&family_)) {
            dfF = d.df * generic_F(*g, u);
        } else {
            dfF = q_f_ + state(std::log(u)).dfF_defect;
        }
        out.history.push_back(dfF);
        out.lhopital_history.push_back(d.df * d.df / (d.f * d.d2f));
    }
    if (!is_generic()) {
        out.q_f = q_f_;
        out.converged = true;
        return out;
    }
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    auto last_change = [](const std::vector<double>& v) {
        const double a = v[v.size() - 1], b = v[v.size() - 2];
        return std::abs(a - b) / std::max(1.0, std::abs(a));
    };
    if (!finite(out.history) || last_change(out.history) > 1e-2) {
        throw NoLimitError("f'(u)F(u) does not stabilize on u = 10^2..10^8");
    }
    const double a = aitken(out.history);
    out.q_f = a;
    bool lhopital_ok = finite(out.lhopital_history);
    const double b = lhopital_ok ? aitken(out.lhopital_history) : kNaN;
    const bool cauchy = last_change(out.history) <= 1e-4 &&
                        (!lhopital_ok || last_change(out.lhopital_history) <= 1e-4);
    out.converged = cauchy && lhopital_ok && std::abs(a - b) <= 1e-4 * std::max(1.0, std::abs(a));
    return out;
}

SeriesDiagnostics Nonlinearity::series_diagnostics(double s, int terms) const {
    if (is_generic()) throw UnsupportedFamily("series diagnostics need a built-in family");
    if (!(s > std::max(s_min_, 1.0))) throw DomainError("series need s > max(1, s_min)");
    if (terms < 1) throw DomainError("terms must be positive");
    SeriesDiagnostics out;
    out.s = s;
    out.terms = terms;
    const double L = std::log(s);

    // Asymptotic expansion fF/s = sum_k m_k / (p-1)^{k+1} for f = s^p e^{psi(log s)},
    // with m_k = g^(k)/g and g = e^{-psi}; dpsi holds psi', psi'', psi'''.
    auto log_series = [&](double p, const double* m, int available, double dpsi1) {
        const int n = std::min(terms, available - 1);
        out.terms = n;
        const double a = p - 1.0;
        double sum = 0.0;
        double ak = a;
        for (int k = 0; k < n; ++k) {
            sum += m[k] / ak;
            ak *= a;
        }
        const double omitted = std::abs(m[n] / ak);
        const double gamma = 1.0 / a;
        out.fF_over_s_defect = sum - gamma;
        out.fF_over_s_first_omitted = omitted;
        out.dfF_defect = p * out.fF_over_s_defect + dpsi1 * sum;
        out.dfF_first_omitted = (p + std::abs(dpsi1)) * omitted;
        const double prefactor = std::exp((1.0 - p) * L);
        return std::pair<double, double>{prefactor * sum, prefactor * omitted};
    };

    std::visit(
        overloaded{
            [&](const PurePower& f) {
                out.F = std::pow(s, 1.0 - f.p) / (f.p - 1.0);
            },
            [&](const PowerSum& f) {
                const double p = f.p, d = f.p - f.r;
                const double z = std::pow(s, -d);
                // F = sum_k (-1)^k s^{1-p-kd} / (p + kd - 1)
                double F = 0.0;
                double zk = 1.0;
                for (int k = 0; k < terms; ++k) {
                    F += (k % 2 == 0 ? 1.0 : -1.0) * zk / (p + k * d - 1.0);
                    zk *= z;
                }
                const double base = std::pow(s, 1.0 - p);
                out.F = base * F;
                out.F_first_omitted = base * zk / (p + terms * d - 1.0);
                // fF/s = (1+z) sum_k (-1)^k z^k/(p+kd-1); f'F = (p + r z) sum_k ...
                // Coefficients of z^k (k >= 1) in closed form.
                auto c_k = [&](int k) { return 1.0 / (p + k * d - 1.0); };
                double d2 = 0.0, d1 = 0.0;
                zk = 1.0;
                double d2_next = 0.0, d1_next = 0.0;
                for (int k = 1; k <= terms + 1; ++k) {
                    zk *= z;
                    const double sg = (k % 2 == 0 ? 1.0 : -1.0);
                    const double t2 = sg * (c_k(k) - c_k(k - 1)) * zk;
                    const double t1 = sg * (p * c_k(k) - f.r * c_k(k - 1)) * zk;
                    if (k <= terms) {
                        d2 += t2;
                        d1 += t1;
                    } else {
                        d2_next = std::abs(t2);
                        d1_next = std::abs(t1);
                    }
                }
                out.fF_over_s_defect = d2;
                out.dfF_defect = d1;
                out.fF_over_s_first_omitted = d2_next;
                out.dfF_first_omitted = d1_next;
                out.degenerate_leading_term = std::abs(d - 1.0) < 1e-12;
                out.within_validity = z < 1.0 && out.F_first_omitted < 1e-3 * out.F;
            },
            [&](const PowerLog& f) {
                // psi = r log t: m_k = (-1)^k (r)_k / t^k
                double m[16];
                m[0] = 1.0;
                for (int k = 1; k < 16; ++k) m[k] = -m[k - 1] * (f.r + k - 1.0) / L;
                const auto [sum, omitted] = log_series(f.p, m, 16, f.r / L);
                const double h = std::pow(L, -f.r);
                out.F = h * sum;
                out.F_first_omitted = h * omitted;
                out.within_validity = out.F_first_omitted < 1e-3 * out.F;
            },
            [&](const PowerExpLog& f) {
                const double r = f.r;
                const double d1 = r * std::pow(L, r - 1.0);
                const double d2 = r * (r - 1.0) * std::pow(L, r - 2.0);
                const double d3 = r * (r - 1.0) * (r - 2.0) * std::pow(L, r - 3.0);
                const double m[4] = {1.0, -d1, d1 * d1 - d2, -d3 + 3.0 * d1 * d2 - d1 * d1 * d1};
                const auto [sum, omitted] = log_series(f.p, m, 4, d1);
                const double h = std::exp(-std::pow(L, r));
                out.F = h * sum;
                out.F_first_omitted = h * omitted;
                out.within_validity = out.F_first_omitted < 1e-3 * out.F;
            },
            [&](const PowerSumLog& f) {
                const double p = f.p, r = f.r, be = f.log_exp;
                const double c = 2.0 * p - r - 1.0;
                const double v = std::pow(s, r - p) * std::pow(L, be);
                const double base = std::pow(s, 1.0 - p);
                out.terms = std::min(terms, 2);
                out.F = base / (p - 1.0);
                if (out.terms >= 2) out.F -= base * v / c;
                out.F_first_omitted = out.terms >= 2
                                          ? base * v * (std::abs(be) / (c * c * L) + v / (c + p - r))
                                          : base * v / c;
                out.fF_over_s_defect = v * (p - r) / ((p - 1.0) * c);
                out.dfF_defect = -v * (p - r) * (p - r - 1.0) / ((p - 1.0) * c);
                const double next = v * (std::abs(be) / (c * L) + v);
                out.fF_over_s_first_omitted = next;
                out.dfF_first_omitted = p * next;
                out.degenerate_leading_term = std::abs(p - r - 1.0) < 1e-12;
                out.within_validity = out.F_first_omitted < 1e-3 * out.F;
            },
            [](const Generic&) {},
        },
        family_);
    return out;
}

Nonlinearity make_nonlinearity(const std::string& family, double p, double r, double log_exp) {
    if (family == "power") return Nonlinearity(PurePower{p});
    if (family == "power_sum") return Nonlinearity(PowerSum{p, r});
    if (family == "power_log") return Nonlinearity(PowerLog{p, r});
    if (family == "power_exp_log") return Nonlinearity(PowerExpLog{p, r});
    if (family == "power_sum_log") return Nonlinearity(PowerSumLog{p, r, log_exp});
    throw UnsupportedFamily("unknown family '" + family + "'");
}

}  // namespace sforge
