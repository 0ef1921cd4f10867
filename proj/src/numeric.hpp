#pragma once

#include <cmath>
#include <functional>

namespace sforge::detail {

/// log1p(z) - z
[[nodiscard]] double log1p_minus(double z);

/// expm1(z) - z
[[nodiscard]] double expm1_minus(double z);

/// (1+z)^a - 1 - a z
[[nodiscard]] double power_remainder(double a, double z);

struct QuadratureResult {
    double value;
    double error;
    double l1;
};

/// Double-exponential quadrature on (0, 1). Non-finite integrand values
/// near the end points are treated as zero.
[[nodiscard]] QuadratureResult integrate_unit(const std::function<double(double)>& g,
                                              double tolerance = 1e-13);

}  // namespace sforge::detail
