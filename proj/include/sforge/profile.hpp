#pragma once

#include <cstddef>
#include <vector>

#include "sforge/classification.hpp"
#include "sforge/nonlinearity.hpp"

namespace sforge {

/// Uniform grid rho_i = rho0 + i h, i = 0..M-1.
struct Grid {
    double rho0 = 0.0;
    double rho_max = 0.0;
    std::size_t M = 0;

    [[nodiscard]] double h() const noexcept {
        return (rho_max - rho0) / static_cast<double>(M - 1);
    }
    [[nodiscard]] double rho(std::size_t i) const noexcept {
        return i + 1 == M ? rho_max : rho0 + static_cast<double>(i) * h();
    }
};

/// Emden-side data cached on a grid: phi = F^{-1}(e^{-2 rho}/b) and the
/// coefficients of the remainder equation
///   eta'' + a eta' + b eta + I + L1 eta + L2 eta' + N[eta] = 0.
struct ProfileContext {
    Nonlinearity nl;
    Classification cls;
    Grid grid;
    std::vector<double> rho;
    std::vector<double> log_phi;
    std::vector<double> phi;
    std::vector<double> dphi;        ///< d phi / d rho = 2 f(phi) F(phi)
    std::vector<double> fF_over_phi;
    std::vector<double> D1;          ///< f'(phi)F(phi) - q_f
    std::vector<double> D2;          ///< f(phi)F(phi)/phi - 1/(p_f-1)
    std::vector<double> I;
    std::vector<double> L1;
    std::vector<double> L2;

    [[nodiscard]] std::size_t size() const noexcept { return rho.size(); }
    [[nodiscard]] double h() const noexcept { return grid.h(); }
};

struct SolutionProfile {
    double N = 0.0;
    std::vector<double> rho;
    std::vector<double> r;            ///< e^{-rho}, descending
    std::vector<double> phi;
    std::vector<double> I;
    std::vector<double> eta;
    std::vector<double> eta_prime;
    std::vector<double> theta;
    std::vector<double> r_theta_prime;  ///< r theta'(r) = -eta'(rho)
    std::vector<double> tilde_u;
    std::vector<double> u;
    std::vector<double> du_drho;      ///< analytic phi'(1+eta) + phi eta'
    std::vector<double> du_dr;
    std::vector<double> residual;     ///< |-u'' - (N-1)u'/r - f(u)| / f(u)
};

/// F^{-1}(r^2 / (2N - 4 q_f)).
[[nodiscard]] double tilde_u(const Nonlinearity& nl, const Classification& cls, double r);

/// Throws GridError when phi(rho0) <= s_min or the grid is malformed.
[[nodiscard]] ProfileContext build_context(const Nonlinearity& nl, const Classification& cls,
                                           double rho0, double rho_max, std::size_t M);

/// b (F(phi)/phi) (f(phi(1+eta)) - f(phi) - f'(phi) phi eta) at a node.
/// Throws IterateOutOfDomain when phi(1+eta) leaves the domain of f.
[[nodiscard]] double nonlinear_term(const ProfileContext& ctx, std::size_t node, double eta);

[[nodiscard]] SolutionProfile to_radial(const ProfileContext& ctx, const std::vector<double>& eta,
                                        const std::vector<double>& eta_prime);

/// Relative residual of the radial equation at each node from u sampled on a
/// uniform rho-grid; u'' uses fourth-order differences (one-sided at the ends).
[[nodiscard]] std::vector<double> radial_residual(const Nonlinearity& nl, double N, double h,
                                                  const std::vector<double>& rho,
                                                  const std::vector<double>& u,
                                                  const std::vector<double>& du_drho);

}  // namespace sforge
