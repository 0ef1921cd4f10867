#include "sforge/profile.hpp"

#include <cmath>
#include <string>

#include "sforge/errors.hpp"

namespace sforge {

double tilde_u(const Nonlinearity& nl, const Classification& cls, double r) {
    if (!(r > 0.0)) throw DomainError("r must be positive");
    if (!cls.in_scope()) throw DomainError("tilde_u needs an in-scope classification");
    return nl.F_inverse(r * r / cls.b);
}

ProfileContext build_context(const Nonlinearity& nl, const Classification& cls, double rho0,
                             double rho_max, std::size_t M) {
    if (!cls.in_scope()) throw DomainError("profile needs an in-scope classification");
    if (!(rho0 < rho_max) || !std::isfinite(rho0) || !std::isfinite(rho_max)) {
        throw GridError("grid needs rho0 < rho_max");
    }
    if (M < 6) throw GridError("grid needs at least 6 nodes");

    ProfileContext ctx{nl, cls, Grid{rho0, rho_max, M}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    const double b = cls.b;
    const double gamma = 1.0 / (cls.p_f - 1.0);
    for (auto* v : {&ctx.rho, &ctx.log_phi, &ctx.phi, &ctx.dphi, &ctx.fF_over_phi, &ctx.D1,
                    &ctx.D2, &ctx.I, &ctx.L1, &ctx.L2}) {
        v->resize(M);
    }
    for (std::size_t i = 0; i < M; ++i) {
        const double rho = ctx.grid.rho(i);
        const double sigma = std::exp(-2.0 * rho) / b;
        double x = 0.0;
        try {
            x = nl.log_F_inverse(sigma);
        } catch (const DomainError&) {
            throw GridError("phi(rho) leaves the domain of f at rho=" + std::to_string(rho));
        }
        if (!(std::exp(x) > nl.s_min())) {
            throw GridError("phi(rho0) must exceed s_min");
        }
        const auto st = nl.state(x);
        ctx.rho[i] = rho;
        ctx.log_phi[i] = x;
        ctx.phi[i] = std::exp(x);
        ctx.fF_over_phi[i] = st.fF_over_s;
        ctx.dphi[i] = 2.0 * ctx.phi[i] * st.fF_over_s;
        ctx.D1[i] = st.dfF_defect;
        ctx.D2[i] = st.fF_over_s_defect;
        ctx.I[i] = 4.0 * (gamma + st.fF_over_s_defect) * st.dfF_defect;
        ctx.L1[i] = b * (st.dfF_defect - st.fF_over_s_defect) + ctx.I[i];
        ctx.L2[i] = 4.0 * st.fF_over_s_defect;
    }
    return ctx;
}

double nonlinear_term(const ProfileContext& ctx, std::size_t node, double eta) {
    const double x = ctx.log_phi[node];
    if (!(1.0 + eta > ctx.nl.min_relative_argument(x))) {
        throw IterateOutOfDomain("iterate leaves the domain of f at rho=" +
                                 std::to_string(ctx.rho[node]));
    }
    return ctx.cls.b * ctx.fF_over_phi[node] * ctx.nl.taylor_remainder(x, eta);
}

std::vector<double> radial_residual(const Nonlinearity& nl, double N, double h,
                                    const std::vector<double>& rho, const std::vector<double>& u,
                                    const std::vector<double>& du_drho) {
    const std::size_t M = u.size();
    std::vector<double> res(M, 0.0);
    if (M < 6) return res;
    const double c = 1.0 / (12.0 * h * h);
    auto second = [&](std::size_t i) {
        if (i >= 2 && i + 2 < M) {
            return c * (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]);
        }
        // One-sided fourth-order stencils, mirrored at the right end.
        const bool left = i < 2;
        auto at = [&](std::size_t k) { return left ? u[k] : u[M - 1 - k]; };
        const std::size_t j = left ? i : M - 1 - i;
        if (j == 0) {
            return c * (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) +
                        61.0 * at(4) - 10.0 * at(5));
        }
        return c * (10.0 * at(0) - 15.0 * at(1) - 4.0 * at(2) + 14.0 * at(3) - 6.0 * at(4) +
                    at(5));
    };
    for (std::size_t i = 0; i < M; ++i) {
        const double f = nl.evaluate(u[i]).f;
        const double lhs = -std::exp(2.0 * rho[i]) * (second(i) - (N - 2.0) * du_drho[i]);
        res[i] = std::abs(lhs - f) / f;
    }
    return res;
}

SolutionProfile to_radial(const ProfileContext& ctx, const std::vector<double>& eta,
                          const std::vector<double>& eta_prime) {
    const std::size_t M = ctx.size();
    if (eta.size() != M || eta_prime.size() != M) throw GridError("grid functions do not match");
    SolutionProfile out;
    out.N = ctx.cls.N;
    out.rho = ctx.rho;
    out.phi = ctx.phi;
    out.I = ctx.I;
    out.eta = eta;
    out.eta_prime = eta_prime;
    out.theta = eta;
    out.tilde_u = ctx.phi;
    out.r.resize(M);
    out.r_theta_prime.resize(M);
    out.u.resize(M);
    out.du_drho.resize(M);
    out.du_dr.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        out.r[i] = std::exp(-ctx.rho[i]);
        out.r_theta_prime[i] = -eta_prime[i];
        out.u[i] = ctx.phi[i] * (1.0 + eta[i]);
        out.du_drho[i] = ctx.dphi[i] * (1.0 + eta[i]) + ctx.phi[i] * eta_prime[i];
        out.du_dr[i] = -out.du_drho[i] / out.r[i];
    }
    out.residual = radial_residual(ctx.nl, ctx.cls.N, ctx.h(), out.rho, out.u, out.du_drho);
    return out;
}

}  // namespace sforge
