#pragma once

#include <stdexcept>
#include <string>

namespace eplim {

/// Source term incompatible with a periodic elliptic solve (nonzero mean),
/// or charge data that violates the neutrality constraint.
struct CompatibilityError : std::runtime_error {
    explicit CompatibilityError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solve (Newton, Richardson inner loop) exhausted its budget.
struct NonConvergenceError : std::runtime_error {
    explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A time integration left the trusted regime: density floor hit, field norm
/// exploded, or a conservation check failed.
struct BlowUpError : std::runtime_error {
    explicit BlowUpError(const std::string& what) : std::runtime_error(what) {}
};

/// The pressureless ion flow reached (or would reach) a characteristic crossing.
struct CharacteristicCrossingError : std::runtime_error {
    explicit CharacteristicCrossingError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed configuration file or inconsistent CLI arguments.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace eplim
