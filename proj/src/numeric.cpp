#include "numeric.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace sforge::detail {

double log1p_minus(double z) {
    if (std::abs(z) < 0.1) {
        // -z^2/2 + z^3/3 - ...
        double term = z;
        double sum = 0.0;
        for (int k = 2; k < 40; ++k) {
            term *= -z;
            const double add = term / k;
            sum += add;
            if (std::abs(add) <= 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    return std::log1p(z) - z;
}

double expm1_minus(double z) {
    if (std::abs(z) < 0.1) {
        double term = z;
        double sum = 0.0;
        for (int k = 2; k < 40; ++k) {
            term *= z / k;
            sum += term;
            if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    return std::expm1(z) - z;
}

double power_remainder(double a, double z) {
    const double l = std::log1p(z);
    return expm1_minus(a * l) + a * log1p_minus(z);
}

QuadratureResult integrate_unit(const std::function<double(double)>& g, double tolerance) {
    // The const overload of integrate() does not compile with Boost 1.74.
    thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    auto guarded = [&g](double t) {
        const double v = g(t);
        return std::isfinite(v) ? v : 0.0;
    };
    QuadratureResult out{};
    out.value = integrator.integrate(guarded, 0.0, 1.0, tolerance, &out.error, &out.l1);
    return out;
}

}  // namespace sforge::detail
