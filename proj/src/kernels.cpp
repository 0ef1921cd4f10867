#include "sforge/kernels.hpp"

#include <cmath>

#include "sforge/errors.hpp"

namespace sforge {

namespace {

using cd = std::complex<double>;

void check_order(double rho, double tau) {
    if (rho < tau) throw OrderError("kernel needs rho >= tau");
}

}  // namespace

double SeparableKernel::operator()(double d) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
        const cd v = t.coef * std::exp(t.mu * d);
        sum += (t.power == 0 ? v : v * d).real();
    }
    return sum;
}

std::vector<double> SeparableKernel::convolve(double h, const std::vector<double>& g) const {
    const std::size_t M = g.size();
    std::vector<double> out(M, 0.0);
    if (M == 0) return out;
    for (const auto& t : terms_) {
        const cd E = std::exp(t.mu * h);
        cd S = g[0];
        cd B = 0.0;
        for (std::size_t i = 1; i < M; ++i) {
            if (t.power == 1) B = E * (B + h * S);
            S = E * S + g[i];
            const double di = static_cast<double>(i) * h;
            const cd Ei = std::exp(t.mu * di);
            cd trap;
            if (t.power == 0) {
                trap = S - 0.5 * Ei * g[0] - 0.5 * g[i];
            } else {
                trap = B - 0.5 * di * Ei * g[0];
            }
            out[i] += (t.coef * h * trap).real();
        }
    }
    return out;
}

std::vector<double> SeparableKernel::convolve_direct(double h, const std::vector<double>& g) const {
    const std::size_t M = g.size();
    std::vector<double> out(M, 0.0);
    std::vector<double> k(M);
    for (std::size_t d = 0; d < M; ++d) k[d] = (*this)(static_cast<double>(d) * h);
    for (std::size_t i = 1; i < M; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
            const double w = (j == 0 || j == i) ? 0.5 : 1.0;
            sum += w * k[i - j] * g[j];
        }
        out[i] = h * sum;
    }
    return out;
}

KernelSet::KernelSet(const Classification& cls) : cls_(cls) {
    if (!cls.in_scope()) throw DomainError("kernels need an in-scope classification");
    if (const auto* tr = std::get_if<TwoRealRoots>(&cls.regime)) {
        const double l1 = tr->lambda1, l2 = tr->lambda2, g = l2 - l1;
        K_ = SeparableKernel({{1.0 / g, 0, -l1}, {-1.0 / g, 0, -l2}});
        dK_ = SeparableKernel({{-l1 / g, 0, -l1}, {l2 / g, 0, -l2}});
        Q_ = SeparableKernel({{1.0, 0, -l1}});
    } else if (const auto* dr = std::get_if<DoubleRoot>(&cls.regime)) {
        const double l = dr->lambda_star;
        K_ = SeparableKernel({{1.0, 1, -l}});
        dK_ = SeparableKernel({{1.0, 0, -l}, {-l, 1, -l}});
        Q_ = SeparableKernel({{1.0, 0, -l}, {1.0, 1, -l}});
    } else {
        const auto& cr = std::get<ComplexRoots>(cls.regime);
        const cd mu{-cr.a_half, cr.k};
        // K = e^{-a d/2} sin(k d)/k, dK = e^{-a d/2}(cos k d - (a/2k) sin k d)
        K_ = SeparableKernel({{cd{0.0, -1.0 / cr.k}, 0, mu}});
        dK_ = SeparableKernel({{cd{1.0, cr.a_half / cr.k}, 0, mu}});
        Q_ = SeparableKernel({{1.0, 0, -cr.a_half}});
    }
}

FundamentalPair KernelSet::fundamental_pair(double rho) const {
    if (const auto* tr = std::get_if<TwoRealRoots>(&cls_.regime)) {
        const double e1 = std::exp(-tr->lambda1 * rho), e2 = std::exp(-tr->lambda2 * rho);
        return {e1, e2, -tr->lambda1 * e1, -tr->lambda2 * e2};
    }
    if (const auto* dr = std::get_if<DoubleRoot>(&cls_.regime)) {
        const double l = dr->lambda_star, e = std::exp(-l * rho);
        return {e, rho * e, -l * e, (1.0 - l * rho) * e};
    }
    const auto& cr = std::get<ComplexRoots>(cls_.regime);
    const double e = std::exp(-cr.a_half * rho);
    const double c = std::cos(cr.k * rho), s = std::sin(cr.k * rho);
    return {e * c, e * s, e * (-cr.a_half * c - cr.k * s), e * (-cr.a_half * s + cr.k * c)};
}

double KernelSet::wronskian(double rho) const {
    if (const auto* tr = std::get_if<TwoRealRoots>(&cls_.regime)) {
        return -(tr->lambda2 - tr->lambda1) * std::exp(-(tr->lambda1 + tr->lambda2) * rho);
    }
    if (const auto* dr = std::get_if<DoubleRoot>(&cls_.regime)) {
        return std::exp(-2.0 * dr->lambda_star * rho);
    }
    const auto& cr = std::get<ComplexRoots>(cls_.regime);
    return cr.k * std::exp(-2.0 * cr.a_half * rho);
}

KernelValue KernelSet::kernel_values(double rho, double tau) const {
    check_order(rho, tau);
    if (rho == tau) return {0.0, 1.0};
    const double d = rho - tau;
    return {K_(d), dK_(d)};
}

double KernelSet::super_kernel(double rho, double tau) const {
    check_order(rho, tau);
    if (rho == tau) return 1.0;
    return Q_(rho - tau);
}

double KernelSet::weight_P(double r, double s) const {
    if (!(r > 0.0) || r > s) throw OrderError("weight_P needs 0 < r <= s");
    return super_kernel(std::log(1.0 / r), std::log(1.0 / s));
}

HomogeneousCoeffs KernelSet::homogeneous_coeffs(double rho0, double alpha, double beta) const {
    const auto f = fundamental_pair(rho0);
    const double W = wronskian(rho0);
    return {(f.dphi2 * alpha - f.phi2 * beta) / W, (-f.dphi1 * alpha + f.phi1 * beta) / W};
}

KernelValue KernelSet::homogeneous(double d, double alpha, double beta) const {
    const auto kv = kernel_values(d, 0.0);
    // U = K' + a K has U(0)=1, U'(0)=0; K has K(0)=0, K'(0)=1.
    return {(alpha * cls_.a + beta) * kv.K + alpha * kv.dK, -alpha * cls_.b * kv.K + beta * kv.dK};
}

CumulativeConvolution KernelSet::convolve_cumulative(double h, const std::vector<double>& g) const {
    return {K_.convolve(h, g), dK_.convolve(h, g)};
}

CumulativeConvolution KernelSet::convolve_direct(double h, const std::vector<double>& g) const {
    return {K_.convolve_direct(h, g), dK_.convolve_direct(h, g)};
}

std::vector<double> KernelSet::convolve_Q(double h, const std::vector<double>& g) const {
    return Q_.convolve(h, g);
}

}  // namespace sforge
