#pragma once

#include <stdexcept>
#include <string>

namespace typoattack {

// Malformed or inconsistent input data. Mapped to exit code 2 by the CLI.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required (e.g. diverged training).
// Mapped to exit code 3 by the CLI.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace typoattack
