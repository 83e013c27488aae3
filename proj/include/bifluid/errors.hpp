#pragma once

#include <stdexcept>
#include <string>

namespace bifluid {

// Process exit codes used by the CLI. Library code throws the matching
// exception type; the CLI maps them at the top level.
enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_invariant_violation = 3,
    exit_solver_failure = 4,
};

// Bad or inconsistent user input (config files, CLI flags, constructor args).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A mathematical invariant the scheme relies on was violated at runtime:
// density positivity, smallness budget, volume fraction out of range,
// denominator lower bounds.
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative or direct solver failed to produce a usable answer
// (non-convergence, singular factorization, stagnation).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace bifluid
