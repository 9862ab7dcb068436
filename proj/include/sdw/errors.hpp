#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdw {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scalar root-find (resolvent) missed its tolerance.
class NonConvergence : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Newton produced a non-finite iterate.
class NewtonDiverged : public Error {
public:
    NewtonDiverged(std::size_t step, int iter, double residual)
        : Error("Newton diverged at step " + std::to_string(step) + " (iteration " +
                std::to_string(iter) + ", residual " + std::to_string(residual) + ")"),
          step_index(step), iteration(iter), residual_norm(residual) {}
    std::size_t step_index;
    int iteration;
    double residual_norm;
};

/// Newton ran out of iterations with the residual above tolerance.
class StepRejected : public Error {
public:
    StepRejected(std::size_t step, double residual)
        : Error("step " + std::to_string(step) + " rejected: residual " +
                std::to_string(residual) + " above tolerance"),
          step_index(step), residual_norm(residual) {}
    std::size_t step_index;
    double residual_norm;
};

class TimeNotOnGrid : public Error {
public:
    explicit TimeNotOnGrid(double t) : Error("time " + std::to_string(t) + " is not an output time") {}
};

class MissingReactionRecords : public Error {
public:
    using Error::Error;
};

class InadmissibleTestFunction : public Error {
public:
    using Error::Error;
};

class InadmissibleCandidate : public Error {
public:
    using Error::Error;
};

class InvalidEll : public Error {
public:
    using Error::Error;
};

class OutOfValidityWindow : public Error {
public:
    using Error::Error;
};

/// Invalid or missing configuration entry; `key` is the dotted config path.
class ConfigError : public Error {
public:
    ConfigError(std::string key_, const std::string& what)
        : Error(key_ + ": " + what), key(std::move(key_)) {}
    std::string key;
};

class MissingArtifact : public Error {
public:
    using Error::Error;
};

} // namespace sdw
