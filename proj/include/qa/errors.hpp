#pragma once

#include <stdexcept>
#include <string>

namespace qa {

// Thrown when an exact-enumeration routine is asked for a state space
// larger than its configured cap. The message names the cap.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what_arg, long long requested, long long cap)
        : std::runtime_error(what_arg + " (requested " + std::to_string(requested) +
                             ", cap " + std::to_string(cap) + ")"),
          requested_(requested),
          cap_(cap) {}

    long long requested() const { return requested_; }
    long long cap() const { return cap_; }

private:
    long long requested_;
    long long cap_;
};

// Invalid engine/chain parameterization (e.g. Tsallis q <= 1, or a
// Green's-function diagonal driven negative by too large a time step).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace qa
