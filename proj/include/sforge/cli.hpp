#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sforge/profile.hpp"

namespace sforge {

/// Validated run configuration shared by all subcommands.
struct RunConfig {
    std::string subcommand;
    int N = 5;
    std::string family = "power";
    std::vector<double> p{2.0};  ///< several values only for tables
    std::vector<double> r;       ///< empty means family default / table default list
    double log_exp = 0.0;
    double rho0 = 3.0;                ///< initial rho0 for the adaptive search
    std::optional<double> rho_max;    ///< default rho0 + 40 (tables: rho0 + 60)
    bool fixed_rho0 = false;          ///< skip the adaptive search
    std::size_t M = 4096;
    double tol = 1e-10;
    int max_iter = 200;
    std::vector<std::pair<double, double>> pairs{{0.0, 0.0}};  ///< (alpha, beta)
    std::vector<double> sigma{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    std::string out = ".";
    std::string format = "both";  ///< csv, json or both

    [[nodiscard]] double span() const;
};

enum ExitCode : int { Success = 0, ConfigFailure = 1, ConvergenceFailure = 2, OutOfRegime = 3 };

/// Parses flags (and an optional --config JSON file) into a validated config.
/// Flags override file values. Throws ConfigError naming the offending field.
[[nodiscard]] RunConfig load_config(int argc, const char* const* argv);

/// Validates a config assembled in code; throws ConfigError.
void validate(const RunConfig& cfg);

/// Runs the subcommand, writes its outputs and returns the exit code.
[[nodiscard]] int run(const RunConfig& cfg);

/// Profile CSV: rho,r,phi,I,eta,eta_prime,theta,u,tilde_u,residual with 17 digits.
void write_profile_csv(const std::string& path, const SolutionProfile& profile);

/// Entry point used by the executable: parse, run, map errors to exit codes.
[[nodiscard]] int cli_main(int argc, const char* const* argv);

}  // namespace sforge
