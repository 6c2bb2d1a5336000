// errors.hpp — Exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace lmdyn {

struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear EOM solve failed even after regularization escalation.
struct SingularSystemError : std::runtime_error {
    double condition_estimate{0.0};
    double residual{0.0};
    SingularSystemError(const std::string& msg, double cond, double res)
        : std::runtime_error(msg), condition_estimate(cond), residual(res) {}
};

// Propagation aborted; `time` is the simulation time at failure.
struct NormDriftError : std::runtime_error {
    double time{0.0};
    NormDriftError(const std::string& msg, double t) : std::runtime_error(msg), time(t) {}
};

struct SolverFailureError : std::runtime_error {
    double time{0.0};
    SolverFailureError(const std::string& msg, double t) : std::runtime_error(msg), time(t) {}
};

struct UnitarityError : std::runtime_error {
    double time{0.0};
    UnitarityError(const std::string& msg, double t) : std::runtime_error(msg), time(t) {}
};

// Requested time does not lie on the stored uniform grid.
struct OffGridError : std::invalid_argument {
    double nearest{0.0};
    OffGridError(const std::string& msg, double nearest_time)
        : std::invalid_argument(msg), nearest(nearest_time) {}
};

struct TailMassError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lmdyn
