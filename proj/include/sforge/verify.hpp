#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sforge/profile.hpp"
#include "sforge/solver.hpp"

namespace sforge {

/// Max relative radial residual over interior nodes (two nodes dropped at each end).
[[nodiscard]] double ode_residual_radial(const SolutionProfile& profile);

/// Residual of eta'' + a eta' + b eta + I + L1 eta + L2 eta' + N[eta] at every node,
/// eta'' from three-point differences of eta and eta' as iterated. End nodes are 0.
[[nodiscard]] std::vector<double> eta_residual(const RemainderSolution& sol,
                                               const ProfileContext& ctx,
                                               const TermMask& terms = {});

/// Max of |eta_residual| over interior nodes.
[[nodiscard]] double ode_residual_eta(const RemainderSolution& sol, const ProfileContext& ctx,
                                      const TermMask& terms = {});

/// Relative defect |I| / (b fF/phi) that the radial residual of u = tilde u takes at each node.
[[nodiscard]] std::vector<double> tilde_u_defect(const ProfileContext& ctx);

/// Maximum of |v| over the index windows [M/8, M/4), [M/4, M/2), [M/2, M).
[[nodiscard]] std::vector<double> dyadic_window_maxima(const std::vector<double>& v);

/// True when the three window maxima strictly decrease or all vanish.
[[nodiscard]] bool windows_decrease(const std::vector<double>& maxima);

struct LimitQuantity {
    std::string name;
    double tail = 0.0;  ///< value at the last node
    std::vector<double> window_max;
    bool decreasing = false;
};

struct LimitDiagnostics {
    std::vector<LimitQuantity> quantities;  ///< dfF_defect, fF_over_phi_defect, dphi_over_phi_defect, I, dI
    [[nodiscard]] bool all_decreasing() const;
};

[[nodiscard]] LimitDiagnostics limit_diagnostics(const ProfileContext& ctx);

/// Max of |N[e1] - N[e2]| / ((|e1| + |e2|) |e1 - e2|) over random pairs with
/// |ei| <= 0.1 at nodes of the second half of the grid.
[[nodiscard]] double lipschitz_check(const ProfileContext& ctx, std::size_t samples,
                                     std::uint64_t seed = 1);

/// Heuristic bound 2 p_f b / (p_f - 1) reported next to lipschitz_check.
[[nodiscard]] double lipschitz_cap(const ProfileContext& ctx);

struct DecayFit {
    double lambda = 0.0;
    double power = 0.0;
    double intercept = 0.0;
    double stderr_lambda = 0.0;
    double stderr_power = 0.0;
    std::size_t points = 0;
    bool oscillatory = false;
};

/// Fits log E = c - lambda rho + w log(1 + rho - rho0) with E = |eta| + |eta'| on
/// the last half of the grid without its final 10%. Oscillating data (four or
/// more sign changes of eta) use the strict local maxima of E. Throws FitError
/// when fewer than 8 points remain.
[[nodiscard]] DecayFit decay_fit(const std::vector<double>& rho, const std::vector<double>& eta,
                                 const std::vector<double>& eta_prime, double rho0);

[[nodiscard]] DecayFit decay_fit(const RemainderSolution& sol, const ProfileContext& ctx);

struct CellSpec {
    double N = 5.0;
    std::string family = "power_sum";
    double p = 2.0;
    double r = 1.0;
    double log_exp = 0.0;
    double alpha = 5e-4;
    double beta = 1e-3;
    GridSpec grid{3.0, 60.0, 4096};
    bool auto_rho0 = true;
    SolverOptions solver{};
};

struct CellPrediction {
    double lambda = 0.0;
    double power = 0.0;
    std::string row;  ///< "r<r*", "r=r*", "r>r*" or "log"
    bool degenerate = false;
    std::string note;
};

/// Predicted envelope exp(-lambda rho) rho^power for a cell with the threshold from Lambda.
[[nodiscard]] CellPrediction predict_cell(const Classification& cls, const CellSpec& spec);

struct CellReport {
    CellSpec spec;
    std::string regime;
    double r_star = 0.0;
    double r_star_literal = 0.0;
    CellPrediction prediction;
    /// Same cell predicted with the literal threshold in place of r*.
    CellPrediction literal_prediction;
    std::string supported_threshold;  ///< "corrected", "literal", "both" or "neither"
    double rho0 = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string case_tag;
    DecayFit fit;
    bool lambda_ok = false;
    bool power_ok = false;
    /// Decay at least as fast as the predicted envelope.
    bool consistent_with_bound = false;
    bool pass = false;
    std::string label;  ///< "equal to rate", "consistent with bound" or "violates bound"
    double seconds = 0.0;
    std::string error;
};

/// Full pipeline for one cell; failures are recorded in CellReport::error.
[[nodiscard]] CellReport run_cell(const CellSpec& spec);

/// Cells are independent and run in parallel; output order follows the input.
[[nodiscard]] std::vector<CellReport> table_report(const std::vector<CellSpec>& cells,
                                                   unsigned workers = 0);

/// Default secondary exponents {1, r*, (r* + p)/2} for the given N and p.
[[nodiscard]] std::vector<double> default_r_list(double N, double p);

struct AppendixReport {
    std::vector<double> sigma;
    std::vector<double> scaled_remainder;
    double max_scaled_remainder = 0.0;
};

/// |F^{-1}(s) - ((p-1)s)^{-1/(p-1)} + ((p-1)s)^{(p-r-1)/(p-1)}/(2p-r-1)| / s^{(2(p-r)-1)/(p-1)}
/// for f = s^p + s^r.
[[nodiscard]] AppendixReport appendix_check(double p, double r, const std::vector<double>& sigma);

}  // namespace sforge
