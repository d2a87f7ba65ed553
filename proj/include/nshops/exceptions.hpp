// exceptions.hpp — error taxonomy shared by the library and the CLI exit codes

#pragma once

#include <stdexcept>
#include <string>

namespace nshops {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Parameter outside the validity domain of a model, incompatible
// method/model pairing, or a capacity overflow (CLI exit code 3).
struct ModelDomainError : Error {
    using Error::Error;
};

struct CapacityError : ModelDomainError {
    using ModelDomainError::ModelDomainError;
};

// NaN/Inf states, invalid BCF matrices and similar failures (CLI exit code 4).
struct NumericalError : Error {
    using Error::Error;
};

// A statistical validation (noise-check) did not pass (CLI exit code 5).
struct StatisticalError : Error {
    using Error::Error;
};

// Vacuum-norm underflow in the normalized expectation of the coupling
// operator. Caught by the ensemble driver; the trajectory is discarded.
struct DegenerateTrajectory : NumericalError {
    using NumericalError::NumericalError;
};

inline int exit_code_for(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const ModelDomainError*>(&e)) return 3;
    if (dynamic_cast<const StatisticalError*>(&e)) return 5;
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    return 1;
}

} // namespace nshops
