#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sforge/kernels.hpp"
#include "sforge/profile.hpp"

namespace sforge {

/// Selects which parts of I + L1 eta + L2 eta' + N[eta] enter the map T.
struct TermMask {
    bool forcing = true;
    bool linear = true;
    bool nonlinear = true;
};

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 200;
    TermMask terms{};
};

enum class SolveStatus { Converged, Diverged, MaxIterations, OutOfDomain, NonFinite };

[[nodiscard]] std::string to_string(SolveStatus status);

struct RemainderSolution {
    std::vector<double> eta;
    std::vector<double> eta_prime;
    double alpha = 0.0;
    double beta = 0.0;
    double delta = 0.0;
    double rho0 = 0.0;
    int iterations = 0;
    double final_change = 0.0;
    /// Largest ratio of successive changes from the third iteration on.
    double contraction_ratio = 0.0;
    std::vector<double> changes;  ///< sup|d eta| + sup|d eta'| per iteration
    std::vector<double> ratios;   ///< changes[k] / changes[k-1]
    double weighted_norm = 0.0;
    std::string case_tag;  ///< "A", "B" or "inconclusive"
    SolveStatus status = SolveStatus::MaxIterations;
    std::string message;

    [[nodiscard]] bool converged() const noexcept { return status == SolveStatus::Converged; }
};

struct GridFunctionPair {
    std::vector<double> value;
    std::vector<double> derivative;
};

/// Homogeneous part Phi with Phi(rho0) = alpha, Phi'(rho0) = beta on the context grid.
[[nodiscard]] GridFunctionPair homogeneous_part(const ProfileContext& ctx, const KernelSet& ks,
                                                double alpha, double beta);

/// One application of T: Phi - int K {I + L1 eta + L2 eta' + N[eta]} and its derivative.
[[nodiscard]] GridFunctionPair apply_T(const ProfileContext& ctx, const KernelSet& ks,
                                       const GridFunctionPair& phi,
                                       const std::vector<double>& eta,
                                       const std::vector<double>& eta_prime,
                                       const TermMask& terms = {});

/// Picard iteration from eta_0 = Phi; never throws on non-convergence.
[[nodiscard]] RemainderSolution picard_iterate(const ProfileContext& ctx, const KernelSet& ks,
                                               double alpha, double beta,
                                               const SolverOptions& opts = {});

/// As picard_iterate but throws ConvergenceError carrying the diagnostics
/// in its message when the iteration fails.
[[nodiscard]] RemainderSolution picard_solve(const ProfileContext& ctx, const KernelSet& ks,
                                             double alpha, double beta,
                                             const SolverOptions& opts = {});

/// max(4(alpha + beta), 1e-6)
[[nodiscard]] double default_delta(double alpha, double beta);

/// sup (|eta| + |eta'|) / (delta Q(rho, rho0) + int Q(rho, tau) |I(tau)| dtau).
[[nodiscard]] double weighted_norm(const RemainderSolution& sol, const ProfileContext& ctx,
                                   const KernelSet& ks, double delta);

struct CaseReport {
    std::string tag;             ///< "A" or "B"
    std::vector<double> J;       ///< int_{rho0}^{rho} e^{Lambda (tau - rho0)} |I| dtau
    std::vector<double> increments;  ///< J over the three windows
    std::vector<double> ratios;
};

/// Throws InconclusiveError when the grid is too short for three windows.
[[nodiscard]] CaseReport case_classify(const ProfileContext& ctx, double Lambda);

struct GridSpec {
    double rho0 = 3.0;
    double span = 40.0;  ///< rho_max = rho0 + span
    std::size_t M = 4096;
};

/// Smallest rho0 in {rho0_initial, +2, ..., +16} whose 10-iteration probe contracts
/// monotonically; throws NoContractionError otherwise.
[[nodiscard]] double select_rho0(const Nonlinearity& nl, const Classification& cls, double alpha,
                                 double beta, const GridSpec& grid,
                                 const SolverOptions& opts = {});

struct SweepResult {
    double rho0 = 0.0;
    std::vector<std::pair<double, double>> pairs;
    std::vector<RemainderSolution> solutions;  ///< same order as pairs
    /// sup-norm separation of eta between pairs (i, j), row-major, converged pairs only.
    std::vector<std::vector<double>> separation;
    bool boundary_distinct = true;  ///< |eta_i(rho0) - eta_j(rho0)| == |alpha_i - alpha_j|
    std::size_t converged = 0;
};

/// Worker count from SINGULAR_FORGE_THREADS, else hardware concurrency.
[[nodiscard]] unsigned worker_count();

/// Runs picard_iterate for every pair on a shared context; results do not
/// depend on the number of workers.
[[nodiscard]] SweepResult sweep(const ProfileContext& ctx, const KernelSet& ks,
                                const std::vector<std::pair<double, double>>& pairs,
                                const SolverOptions& opts = {}, unsigned workers = 0);

}  // namespace sforge
