#pragma once

#include <stdexcept>
#include <string>

namespace warped {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration or input data (maps to CLI exit code 2).
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Numerical failure inside a solver (maps to CLI exit code 3).
struct SolverError : Error {
    explicit SolverError(const std::string& what) : Error(what) {}
};

/// The eigenvalue scan could not certify a gap-free spectrum
/// (node-count gap or non-transversal mismatch root).
struct IncompleteSpectrumError : SolverError {
    explicit IncompleteSpectrumError(const std::string& what) : SolverError(what) {}
};

/// Constraint constants are underdetermined (R = H = 0).
struct DegenerateConstantsError : SolverError {
    explicit DegenerateConstantsError(const std::string& what) : SolverError(what) {}
};

} // namespace warped
