#pragma once

#include <complex>
#include <vector>

#include "sforge/classification.hpp"

namespace sforge {

/// Re(coef * d^power * exp(mu d)) with d = rho - tau and Re(mu) < 0.
struct ExpTerm {
    std::complex<double> coef;
    int power;  ///< 0 or 1
    std::complex<double> mu;
};

/// A function of d = rho - tau written as a sum of ExpTerm.
class SeparableKernel {
public:
    SeparableKernel() = default;
    explicit SeparableKernel(std::vector<ExpTerm> terms) : terms_(std::move(terms)) {}

    [[nodiscard]] double operator()(double d) const;
    [[nodiscard]] const std::vector<ExpTerm>& terms() const noexcept { return terms_; }

    /// Trapezoid values h * sum_j w_j k(rho_i - rho_j) g_j for every node i, in O(M).
    [[nodiscard]] std::vector<double> convolve(double h, const std::vector<double>& g) const;

    /// Same rule evaluated directly in O(M^2); reference implementation.
    [[nodiscard]] std::vector<double> convolve_direct(double h, const std::vector<double>& g) const;

private:
    std::vector<ExpTerm> terms_;
};

struct FundamentalPair {
    double phi1;
    double phi2;
    double dphi1;
    double dphi2;
};

struct KernelValue {
    double K;
    double dK;
};

struct HomogeneousCoeffs {
    double C1;
    double C2;
};

struct CumulativeConvolution {
    std::vector<double> K;   ///< int_{rho0}^{rho_i} K(rho_i, tau) g(tau) dtau
    std::vector<double> dK;  ///< same with the rho-derivative of K
};

/// Fundamental solutions and variation-of-parameters kernels of
/// eta'' + a eta' + b eta = 0 for an in-scope classification.
class KernelSet {
public:
    /// Throws DomainError when the classification is out of scope.
    explicit KernelSet(const Classification& cls);

    [[nodiscard]] const Classification& classification() const noexcept { return cls_; }

    [[nodiscard]] FundamentalPair fundamental_pair(double rho) const;
    [[nodiscard]] double wronskian(double rho) const;

    /// K(rho, tau) and its rho-derivative; OrderError when rho < tau.
    [[nodiscard]] KernelValue kernel_values(double rho, double tau) const;
    /// Positive envelope Q(rho, tau); OrderError when rho < tau.
    [[nodiscard]] double super_kernel(double rho, double tau) const;
    /// P(r, s) = Q(log 1/r, log 1/s) for 0 < r <= s.
    [[nodiscard]] double weight_P(double r, double s) const;

    [[nodiscard]] HomogeneousCoeffs homogeneous_coeffs(double rho0, double alpha,
                                                       double beta) const;

    /// Homogeneous solution with value alpha and slope beta at d = 0, evaluated at
    /// d = rho - rho0 without forming Phi1, Phi2 at absolute rho.
    [[nodiscard]] KernelValue homogeneous(double d, double alpha, double beta) const;

    [[nodiscard]] CumulativeConvolution convolve_cumulative(double h,
                                                            const std::vector<double>& g) const;
    [[nodiscard]] CumulativeConvolution convolve_direct(double h,
                                                        const std::vector<double>& g) const;
    [[nodiscard]] std::vector<double> convolve_Q(double h, const std::vector<double>& g) const;

    [[nodiscard]] const SeparableKernel& K() const noexcept { return K_; }
    [[nodiscard]] const SeparableKernel& dK() const noexcept { return dK_; }
    [[nodiscard]] const SeparableKernel& Q() const noexcept { return Q_; }

private:
    Classification cls_;
    SeparableKernel K_;
    SeparableKernel dK_;
    SeparableKernel Q_;
};

}  // namespace sforge
