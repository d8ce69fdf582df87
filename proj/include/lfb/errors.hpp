#pragma once

#include <stdexcept>
#include <string>

namespace lfb {

/// Malformed or inconsistent external input (files, shapes, configuration).
/// CLI maps this to exit code 2.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numeric invariant was violated at runtime (non-finite values,
/// imaginary residue above threshold, out-of-range parameters).
/// CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lfb
