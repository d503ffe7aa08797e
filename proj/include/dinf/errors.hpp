#pragma once

#include <stdexcept>
#include <string>

namespace dinf {

// Error taxonomy mirrors the CLI exit codes: config errors are user-fixable
// key/value problems, data errors cover malformed inputs (images, point
// clouds, checkpoints), diverged_error aborts a run whose loss went
// non-finite, io_error wraps filesystem failures, numeric_error flags domain
// misuse of numeric routines, and internal_error marks bugs (should never
// surface in a correct build).

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct diverged_error : std::runtime_error {
    explicit diverged_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct internal_error : std::logic_error {
    explicit internal_error(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace dinf
