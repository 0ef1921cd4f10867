#include "sforge/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "parallel.hpp"
#include "sforge/errors.hpp"

namespace sforge {

double ode_residual_radial(const SolutionProfile& profile) {
    const std::size_t M = profile.residual.size();
    double m = 0.0;
    for (std::size_t i = 2; i + 2 < M; ++i) m = std::max(m, profile.residual[i]);
    return m;
}

std::vector<double> eta_residual(const RemainderSolution& sol, const ProfileContext& ctx,
                                 const TermMask& terms) {
    const std::size_t M = ctx.size();
    if (sol.eta.size() != M) throw GridError("solution does not match the context");
    std::vector<double> res(M, 0.0);
    const double h = ctx.h();
    const double a = ctx.cls.a, b = ctx.cls.b;
    for (std::size_t i = 1; i + 1 < M; ++i) {
        const double e = sol.eta[i], ep = sol.eta_prime[i];
        const double epp = (sol.eta[i - 1] - 2.0 * e + sol.eta[i + 1]) / (h * h);
        double v = epp + a * ep + b * e;
        if (terms.forcing) v += ctx.I[i];
        if (terms.linear) v += ctx.L1[i] * e + ctx.L2[i] * ep;
        if (terms.nonlinear) v += nonlinear_term(ctx, i, e);
        res[i] = v;
    }
    return res;
}

double ode_residual_eta(const RemainderSolution& sol, const ProfileContext& ctx,
                        const TermMask& terms) {
    const auto res = eta_residual(sol, ctx, terms);
    double m = 0.0;
    for (double v : res) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> tilde_u_defect(const ProfileContext& ctx) {
    std::vector<double> out(ctx.size());
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        out[i] = std::abs(ctx.I[i]) / (ctx.cls.b * ctx.fF_over_phi[i]);
    }
    return out;
}

std::vector<double> dyadic_window_maxima(const std::vector<double>& v) {
    const std::size_t M = v.size();
    const std::size_t e[4] = {M / 8, M / 4, M / 2, M};
    std::vector<double> out;
    for (int k = 0; k < 3; ++k) {
        double m = 0.0;
        for (std::size_t i = e[k]; i < e[k + 1]; ++i) m = std::max(m, std::abs(v[i]));
        out.push_back(m);
    }
    return out;
}

bool windows_decrease(const std::vector<double>& maxima) {
    if (std::all_of(maxima.begin(), maxima.end(), [](double v) { return v == 0.0; })) return true;
    for (std::size_t k = 1; k < maxima.size(); ++k) {
        if (!(maxima[k] < maxima[k - 1])) return false;
    }
    return true;
}

bool LimitDiagnostics::all_decreasing() const {
    return std::all_of(quantities.begin(), quantities.end(),
                       [](const LimitQuantity& q) { return q.decreasing; });
}

LimitDiagnostics limit_diagnostics(const ProfileContext& ctx) {
    const std::size_t M = ctx.size();
    std::vector<double> dphi(M), dI(M);
    const double h = ctx.h();
    for (std::size_t i = 0; i < M; ++i) {
        // phi'/phi - 2/(p_f-1) = 2 (fF/phi - 1/(p_f-1))
        dphi[i] = 2.0 * ctx.D2[i];
        if (i == 0) {
            dI[i] = (ctx.I[1] - ctx.I[0]) / h;
        } else if (i + 1 == M) {
            dI[i] = (ctx.I[i] - ctx.I[i - 1]) / h;
        } else {
            dI[i] = (ctx.I[i + 1] - ctx.I[i - 1]) / (2.0 * h);
        }
    }
    LimitDiagnostics out;
    auto add = [&](const std::string& name, const std::vector<double>& v) {
        LimitQuantity q;
        q.name = name;
        q.tail = v.back();
        q.window_max = dyadic_window_maxima(v);
        q.decreasing = windows_decrease(q.window_max);
        out.quantities.push_back(std::move(q));
    };
    add("dfF_defect", ctx.D1);
    add("fF_over_phi_defect", ctx.D2);
    add("dphi_over_phi_defect", dphi);
    add("I", ctx.I);
    add("dI", dI);
    return out;
}

double lipschitz_check(const ProfileContext& ctx, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t M = ctx.size();
    std::uniform_int_distribution<std::size_t> node(M / 2, M - 1);
    std::uniform_real_distribution<double> val(-0.1, 0.1);
    double m = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const std::size_t i = node(rng);
        const double e1 = val(rng), e2 = val(rng);
        if (e1 == e2) continue;
        const double num = std::abs(nonlinear_term(ctx, i, e1) - nonlinear_term(ctx, i, e2));
        m = std::max(m, num / ((std::abs(e1) + std::abs(e2)) * std::abs(e1 - e2)));
    }
    return m;
}

double lipschitz_cap(const ProfileContext& ctx) {
    const double p = ctx.cls.p_f;
    return 2.0 * p * ctx.cls.b / (p - 1.0);
}

DecayFit decay_fit(const std::vector<double>& rho, const std::vector<double>& eta,
                   const std::vector<double>& eta_prime, double rho0) {
    const std::size_t M = rho.size();
    const std::size_t lo = M / 2;
    const std::size_t hi = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(M)));
    DecayFit fit;
    if (hi <= lo + 2) throw FitError("grid too short for a decay fit");

    int sign_changes = 0;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        if ((eta[i] > 0.0 && eta[i - 1] < 0.0) || (eta[i] < 0.0 && eta[i - 1] > 0.0)) {
            ++sign_changes;
        }
    }
    fit.oscillatory = sign_changes >= 4;

    std::vector<double> xs, ys;
    auto E = [&](std::size_t i) { return std::abs(eta[i]) + std::abs(eta_prime[i]); };
    for (std::size_t i = lo; i < hi; ++i) {
        const double e = E(i);
        if (!(e > 0.0) || !std::isfinite(e)) continue;
        if (fit.oscillatory) {
            if (i == 0 || i + 1 >= M) continue;
            if (!(e > E(i - 1) && e > E(i + 1))) continue;
        }
        xs.push_back(rho[i]);
        ys.push_back(std::log(e));
    }
    fit.points = xs.size();
    if (xs.size() < 8) throw FitError("fewer than 8 envelope points");

    Eigen::MatrixXd A(xs.size(), 3);
    Eigen::VectorXd y(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        A(k, 0) = 1.0;
        A(k, 1) = -xs[k];
        A(k, 2) = std::log(1.0 + xs[k] - rho0);
        y(k) = ys[k];
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
    fit.intercept = coef(0);
    fit.lambda = coef(1);
    fit.power = coef(2);
    const Eigen::VectorXd resid = y - A * coef;
    const double dof = static_cast<double>(xs.size()) - 3.0;
    const double s2 = dof > 0.0 ? resid.squaredNorm() / dof : 0.0;
    const Eigen::MatrixXd cov = s2 * (A.transpose() * A).inverse();
    fit.stderr_lambda = std::sqrt(std::max(0.0, cov(1, 1)));
    fit.stderr_power = std::sqrt(std::max(0.0, cov(2, 2)));
    return fit;
}

DecayFit decay_fit(const RemainderSolution& sol, const ProfileContext& ctx) {
    return decay_fit(ctx.rho, sol.eta, sol.eta_prime, ctx.grid.rho0);
}

namespace {

bool has_secondary_exponent(const std::string& family) {
    return family == "power_sum" || family == "power_sum_log";
}

CellPrediction predict_with_threshold(const Classification& cls, const CellSpec& spec,
                                      double r_threshold, bool adjust_degenerate) {
    CellPrediction pr;
    const double base_power = std::holds_alternative<DoubleRoot>(cls.regime) ? 1.0 : 0.0;
    const double Lambda = cls.Lambda;
    if (spec.family == "power") {
        pr.lambda = Lambda;
        pr.power = base_power;
        pr.row = "r<r*";
        return pr;
    }
    if (spec.family == "power_log") {
        pr.lambda = 0.0;
        pr.power = -1.0;
        pr.row = "log";
        return pr;
    }
    if (spec.family == "power_exp_log") {
        pr.lambda = 0.0;
        pr.power = -(1.0 - spec.r);
        pr.row = "log";
        return pr;
    }
    const double p = spec.p, r = spec.r;
    const double beta_log = spec.family == "power_sum_log" ? spec.log_exp : 0.0;
    double kappa = 2.0 * (p - r) / (p - 1.0);
    pr.degenerate = std::abs(p - r - 1.0) < 1e-12;
    double row_r = r;
    if (pr.degenerate && adjust_degenerate) {
        // The first-order forcing vanishes; the second-order term decays twice as fast.
        kappa *= 2.0;
        row_r = p - (p - 1.0) * kappa / 2.0;
        pr.note = "p - r = 1: forcing rate from the second-order term";
    }
    const double tol = 1e-9;
    if (row_r < r_threshold - tol) {
        pr.row = "r<r*";
        pr.lambda = Lambda;
        pr.power = base_power;
    } else if (row_r <= r_threshold + tol) {
        pr.row = "r=r*";
        pr.lambda = Lambda;
        pr.power = base_power + 1.0 + beta_log;
        if (base_power == 1.0 && beta_log == -1.0) pr.note = "log log correction not fitted";
    } else {
        pr.row = "r>r*";
        pr.lambda = kappa;
        pr.power = beta_log;
    }
    return pr;
}

bool matches(const CellPrediction& pr, const DecayFit& fit, bool check_power) {
    const bool lam = pr.lambda > 0.0 ? std::abs(fit.lambda - pr.lambda) <= 0.1 * pr.lambda
                                     : std::abs(fit.lambda) <= 0.02;
    const bool pw = !check_power || std::abs(fit.power - pr.power) <= 0.3;
    return lam && pw;
}

}  // namespace

CellPrediction predict_cell(const Classification& cls, const CellSpec& spec) {
    return predict_with_threshold(cls, spec, threshold_rstar(cls, spec.p), true);
}

CellReport run_cell(const CellSpec& spec) {
    const auto t0 = std::chrono::steady_clock::now();
    CellReport rep;
    rep.spec = spec;
    try {
        const auto nl = make_nonlinearity(spec.family, spec.p, spec.r, spec.log_exp);
        const auto cls = classify(nl, spec.N);
        rep.regime = regime_name(cls.regime);
        if (!cls.in_scope()) throw DomainError("cell is out of scope");
        rep.r_star = threshold_rstar(cls, spec.p);
        rep.r_star_literal = threshold_rstar_literal(cls, spec.p);
        rep.prediction = predict_cell(cls, spec);
        rep.literal_prediction = has_secondary_exponent(spec.family)
                                     ? predict_with_threshold(cls, spec, rep.r_star_literal, false)
                                     : rep.prediction;
        rep.rho0 = spec.auto_rho0
                       ? select_rho0(nl, cls, spec.alpha, spec.beta, spec.grid, spec.solver)
                       : spec.grid.rho0;
        const KernelSet ks(cls);
        const auto ctx = build_context(nl, cls, rep.rho0, rep.rho0 + spec.grid.span, spec.grid.M);
        const auto sol = picard_iterate(ctx, ks, spec.alpha, spec.beta, spec.solver);
        rep.converged = sol.converged();
        rep.iterations = sol.iterations;
        rep.case_tag = sol.case_tag;
        if (!rep.converged) throw ConvergenceError("Picard iteration " + to_string(sol.status));
        rep.fit = decay_fit(sol, ctx);
        const bool check_power = rep.prediction.power != 0.0 || rep.prediction.row == "log";
        const auto& pr = rep.prediction;
        rep.lambda_ok = matches(pr, rep.fit, false);
        rep.power_ok = !check_power || std::abs(rep.fit.power - pr.power) <= 0.3;
        rep.pass = rep.lambda_ok && rep.power_ok;
        rep.consistent_with_bound =
            rep.fit.lambda > 1.1 * pr.lambda ||
            (rep.fit.lambda >= 0.9 * pr.lambda && rep.fit.power <= pr.power + 0.3);
        rep.label = rep.pass ? "equal to rate"
                             : rep.consistent_with_bound ? "consistent with bound" : "violates bound";
        const bool corrected = matches(rep.prediction, rep.fit, false);
        const bool literal = matches(rep.literal_prediction, rep.fit, false);
        rep.supported_threshold =
            corrected && literal ? "both" : corrected ? "corrected" : literal ? "literal" : "neither";
    } catch (const std::exception& e) {
        rep.error = e.what();
        rep.pass = false;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::vector<CellReport> table_report(const std::vector<CellSpec>& cells, unsigned workers) {
    std::vector<CellReport> out(cells.size());
    detail::parallel_for(cells.size(), workers == 0 ? worker_count() : workers,
                         [&](std::size_t i) { out[i] = run_cell(cells[i]); });
    return out;
}

std::vector<double> default_r_list(double N, double p) {
    const auto cls = classify(p / (p - 1.0), N);
    const double rs = threshold_rstar(cls, p);
    return {1.0, rs, 0.5 * (rs + p)};
}

AppendixReport appendix_check(double p, double r, const std::vector<double>& sigma) {
    if (!(r > 0.0 && r < p)) throw DomainError("appendix check needs 0 < r < p");
    const Nonlinearity nl(PowerSum{p, r});
    AppendixReport rep;
    const double g = 1.0 / (p - 1.0);
    for (double s : sigma) {
        if (!(s > 0.0 && s <= 0.1)) throw DomainError("sigma must lie in (0, 0.1]");
        const double ps = (p - 1.0) * s;
        const double expansion =
            std::pow(ps, -g) - std::pow(ps, (p - r - 1.0) * g) / (2.0 * p - r - 1.0);
        const double R =
            std::abs(nl.F_inverse(s) - expansion) / std::pow(s, (2.0 * (p - r) - 1.0) * g);
        rep.sigma.push_back(s);
        rep.scaled_remainder.push_back(R);
        rep.max_scaled_remainder = std::max(rep.max_scaled_remainder, R);
    }
    return rep;
}

}  // namespace sforge
