#pragma once

#include "qdyn/dynamics.hpp"
#include "qdyn/stability.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qdyn::cli {

enum ExitCode : int { Success = 0, VerificationFailure = 1, UsageError = 2 };

enum class OutputFormat { Json, Csv };

struct Tolerances {
    double tau_unit = default_unit_tolerance;
    double eps_conv = 1e-12;
    double r_escape = 1e8;
    double bisect_tol = 1e-8;
};

struct RunConfig {
    std::vector<double> theta;
    std::uint64_t seed = 0;
    Tolerances tolerances;
    std::size_t budget = default_budget;
    OutputFormat output_format = OutputFormat::Json;
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qdyn::cli
