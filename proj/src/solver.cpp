#include "sforge/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "parallel.hpp"
#include "sforge/errors.hpp"

namespace sforge {

namespace {

double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::Diverged: return "diverged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::OutOfDomain: return "out_of_domain";
        case SolveStatus::NonFinite: return "non_finite";
    }
    return "unknown";
}

GridFunctionPair homogeneous_part(const ProfileContext& ctx, const KernelSet& ks, double alpha,
                                  double beta) {
    const std::size_t M = ctx.size();
    GridFunctionPair out{std::vector<double>(M), std::vector<double>(M)};
    const double h = ctx.h();
    for (std::size_t i = 0; i < M; ++i) {
        const auto v = ks.homogeneous(static_cast<double>(i) * h, alpha, beta);
        out.value[i] = v.K;
        out.derivative[i] = v.dK;
    }
    return out;
}

GridFunctionPair apply_T(const ProfileContext& ctx, const KernelSet& ks,
                         const GridFunctionPair& phi, const std::vector<double>& eta,
                         const std::vector<double>& eta_prime, const TermMask& terms) {
    const std::size_t M = ctx.size();
    if (eta.size() != M || eta_prime.size() != M || phi.value.size() != M) {
        throw GridError("grid functions do not match the context");
    }
    std::vector<double> g(M, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
        double v = 0.0;
        if (terms.forcing) v += ctx.I[i];
        if (terms.linear) v += ctx.L1[i] * eta[i] + ctx.L2[i] * eta_prime[i];
        if (terms.nonlinear) v += nonlinear_term(ctx, i, eta[i]);
        g[i] = v;
    }
    const auto conv = ks.convolve_cumulative(ctx.h(), g);
    GridFunctionPair out{std::vector<double>(M), std::vector<double>(M)};
    for (std::size_t i = 0; i < M; ++i) {
        out.value[i] = phi.value[i] - conv.K[i];
        out.derivative[i] = phi.derivative[i] - conv.dK[i];
    }
    return out;
}

double default_delta(double alpha, double beta) {
    return std::max(4.0 * (alpha + beta), 1e-6);
}

RemainderSolution picard_iterate(const ProfileContext& ctx, const KernelSet& ks, double alpha,
                                 double beta, const SolverOptions& opts) {
    RemainderSolution sol;
    sol.alpha = alpha;
    sol.beta = beta;
    sol.delta = default_delta(alpha, beta);
    sol.rho0 = ctx.grid.rho0;

    const auto phi = homogeneous_part(ctx, ks, alpha, beta);
    std::vector<double> eta = phi.value;
    std::vector<double> eta_prime = phi.derivative;
    int non_contracting = 0;
    sol.status = SolveStatus::MaxIterations;

    for (int k = 1; k <= opts.max_iter; ++k) {
        GridFunctionPair next;
        try {
            next = apply_T(ctx, ks, phi, eta, eta_prime, opts.terms);
        } catch (const DomainError& e) {
            sol.status = SolveStatus::OutOfDomain;
            sol.message = e.what();
            break;
        }
        if (!all_finite(next.value) || !all_finite(next.derivative)) {
            sol.status = SolveStatus::NonFinite;
            sol.message = "iterate is not finite";
            break;
        }
        const double change =
            sup_abs_diff(next.value, eta) + sup_abs_diff(next.derivative, eta_prime);
        eta = std::move(next.value);
        eta_prime = std::move(next.derivative);
        sol.iterations = k;
        sol.final_change = change;
        if (!sol.changes.empty()) {
            const double prev = sol.changes.back();
            const double ratio = prev > 0.0 ? change / prev : (change > 0.0 ? INFINITY : 0.0);
            sol.ratios.push_back(ratio);
            if (k >= 3) sol.contraction_ratio = std::max(sol.contraction_ratio, ratio);
            non_contracting = ratio >= 1.0 ? non_contracting + 1 : 0;
        }
        sol.changes.push_back(change);
        if (change < opts.tol) {
            sol.status = SolveStatus::Converged;
            break;
        }
        if (non_contracting >= 3) {
            sol.status = SolveStatus::Diverged;
            sol.message = "three consecutive non-contracting steps";
            break;
        }
    }
    sol.eta = std::move(eta);
    sol.eta_prime = std::move(eta_prime);
    if (sol.status == SolveStatus::MaxIterations && sol.message.empty()) {
        sol.message = "iteration cap reached";
    }
    sol.weighted_norm = weighted_norm(sol, ctx, ks, sol.delta);
    try {
        sol.case_tag = case_classify(ctx, ctx.cls.Lambda).tag;
    } catch (const InconclusiveError&) {
        sol.case_tag = "inconclusive";
    }
    return sol;
}

RemainderSolution picard_solve(const ProfileContext& ctx, const KernelSet& ks, double alpha,
                               double beta, const SolverOptions& opts) {
    if (alpha < 0.0 || beta < 0.0) throw DomainError("alpha and beta must be non-negative");
    auto sol = picard_iterate(ctx, ks, alpha, beta, opts);
    if (!sol.converged()) {
        std::ostringstream os;
        os << "Picard iteration " << to_string(sol.status) << " after " << sol.iterations
           << " iterations (last change " << sol.final_change << ", rho0 " << sol.rho0 << ")";
        if (!sol.message.empty()) os << ": " << sol.message;
        throw ConvergenceError(os.str());
    }
    return sol;
}

double weighted_norm(const RemainderSolution& sol, const ProfileContext& ctx, const KernelSet& ks,
                     double delta) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    const std::size_t M = ctx.size();
    std::vector<double> absI(M);
    for (std::size_t i = 0; i < M; ++i) absI[i] = std::abs(ctx.I[i]);
    const auto qI = ks.convolve_Q(ctx.h(), absI);
    double norm = 0.0;
    for (std::size_t i = 0; i < M && i < sol.eta.size(); ++i) {
        const double d = static_cast<double>(i) * ctx.h();
        const double den = delta * ks.super_kernel(d, 0.0) + qI[i];
        norm = std::max(norm, (std::abs(sol.eta[i]) + std::abs(sol.eta_prime[i])) / den);
    }
    return norm;
}

CaseReport case_classify(const ProfileContext& ctx, double Lambda) {
    const std::size_t M = ctx.size();
    const double L = ctx.grid.rho_max - ctx.grid.rho0;
    if (M < 32 || L < 8.0) throw InconclusiveError("grid too short for three dyadic windows");
    CaseReport rep;
    rep.J.assign(M, 0.0);
    const double h = ctx.h();
    auto integrand = [&](std::size_t i) {
        return std::exp(Lambda * (ctx.rho[i] - ctx.grid.rho0)) * std::abs(ctx.I[i]);
    };
    double prev = integrand(0);
    for (std::size_t i = 1; i < M; ++i) {
        const double cur = integrand(i);
        rep.J[i] = rep.J[i - 1] + 0.5 * h * (prev + cur);
        prev = cur;
    }
    auto node = [&](double frac) {
        return std::min(M - 1, static_cast<std::size_t>(std::llround(frac * (M - 1))));
    };
    const std::size_t e[4] = {node(0.125), node(0.25), node(0.5), M - 1};
    for (int k = 0; k < 3; ++k) rep.increments.push_back(rep.J[e[k + 1]] - rep.J[e[k]]);
    const bool all_zero = std::all_of(rep.increments.begin(), rep.increments.end(),
                                      [](double v) { return v == 0.0; });
    bool decaying = true;
    for (int k = 0; k < 2; ++k) {
        const double r = rep.increments[k] > 0.0 ? rep.increments[k + 1] / rep.increments[k]
                                                 : (rep.increments[k + 1] > 0.0 ? INFINITY : 0.0);
        rep.ratios.push_back(r);
        if (!(r < 1.0)) decaying = false;
    }
    rep.tag = (all_zero || decaying) ? "A" : "B";
    return rep;
}

double select_rho0(const Nonlinearity& nl, const Classification& cls, double alpha, double beta,
                   const GridSpec& grid, const SolverOptions& opts) {
    if (alpha + beta < 0.0) throw DomainError("alpha + beta must be non-negative");
    const KernelSet ks(cls);
    SolverOptions probe = opts;
    probe.max_iter = 10;
    std::string last;
    for (int k = 0; k <= 8; ++k) {
        const double rho0 = grid.rho0 + 2.0 * k;
        std::optional<ProfileContext> ctx;
        try {
            ctx.emplace(build_context(nl, cls, rho0, rho0 + grid.span, grid.M));
        } catch (const GridError& e) {
            last = e.what();
            continue;
        }
        const auto sol = picard_iterate(*ctx, ks, alpha, beta, probe);
        if (sol.converged()) return rho0;
        if (sol.status != SolveStatus::MaxIterations) {
            last = to_string(sol.status);
            continue;
        }
        const bool monotone = std::all_of(sol.ratios.begin(), sol.ratios.end(),
                                          [](double r) { return r < 1.0; });
        if (monotone) return rho0;
        last = "probe not monotone";
    }
    throw NoContractionError("no rho0 in the search range gives a contracting probe (" + last +
                             ")");
}

unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SINGULAR_FORGE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

SweepResult sweep(const ProfileContext& ctx, const KernelSet& ks,
                  const std::vector<std::pair<double, double>>& pairs, const SolverOptions& opts,
                  unsigned workers) {
    SweepResult out;
    out.rho0 = ctx.grid.rho0;
    out.pairs = pairs;
    out.solutions.resize(pairs.size());
    detail::parallel_for(pairs.size(), workers == 0 ? worker_count() : workers,
                         [&](std::size_t i) {
                             out.solutions[i] =
                                 picard_iterate(ctx, ks, pairs[i].first, pairs[i].second, opts);
                         });
    const std::size_t n = pairs.size();
    out.separation.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (out.solutions[i].converged()) ++out.converged;
        for (std::size_t j = 0; j < n; ++j) {
            const auto& a = out.solutions[i];
            const auto& b = out.solutions[j];
            if (!a.converged() || !b.converged()) continue;
            out.separation[i][j] = sup_abs_diff(a.eta, b.eta);
            if (std::abs(a.eta.front() - b.eta.front()) != std::abs(a.alpha - b.alpha)) {
                out.boundary_distinct = false;
            }
        }
    }
    return out;
}

}  // namespace sforge
