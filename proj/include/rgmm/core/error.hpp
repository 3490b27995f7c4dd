#pragma once

#include <stdexcept>
#include <string>

namespace rgmm {

/// Raised when caller-supplied data violates a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an algorithm cannot produce a result for valid input
/// (a filter that removed every point, a separator that found no gap, ...).
class AlgorithmFailure : public std::runtime_error {
public:
    explicit AlgorithmFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a dense tensor would exceed the configured entry budget.
class MemoryGuardExceeded : public InvalidInput {
public:
    MemoryGuardExceeded(const std::string& what, double required_entries)
        : InvalidInput(what), required_entries_(required_entries) {}

    double required_entries() const noexcept { return required_entries_; }

private:
    double required_entries_;
};

}  // namespace rgmm
