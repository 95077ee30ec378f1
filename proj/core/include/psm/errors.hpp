#pragma once

#include <new>
#include <stdexcept>
#include <string>

namespace psm {

// Misuse of the allocator state machine: double free, foreign block,
// rebinding a thread, releasing an unknown extent, and the like.
class StateError : public std::logic_error {
public:
    explicit StateError(const std::string& what) : std::logic_error(what) {}
};

// Bad configuration input (topology file, unsupported page size, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Simulated per-node capacity exhausted.
class CapacityError : public std::bad_alloc {
public:
    explicit CapacityError(std::string what) : what_(std::move(what)) {}
    const char* what() const noexcept override { return what_.c_str(); }

private:
    std::string what_;
};

} // namespace psm
