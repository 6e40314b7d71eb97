// SPDX-License-Identifier: Apache-2.0
//
// Shared error types and small string helpers.

#ifndef SISFORGE_COMMON_HPP
#define SISFORGE_COMMON_HPP

#include <cstdio>
#include <stdexcept>
#include <string>

namespace sisforge {

// Base class for everything this library throws.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Incompatible matrix/array shapes. The message names both shapes.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// Bad config file, bad key, bad value. Messages carry the line number
// where applicable so the CLI can report it verbatim.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// Numerical failure: SVD non-convergence, training divergence, ...
class NumericError : public Error {
  public:
    explicit NumericError(const std::string &msg, double residual = 0.0)
        : Error(msg), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

// printf-style formatting into std::string (libstdc++ 11 has no <format>).
template <typename... Args>
std::string strfmt(const char *fmt, Args... args) {
    const int n = std::snprintf(nullptr, 0, fmt, args...);
    std::string out(static_cast<std::size_t>(n), '\0');
    std::snprintf(out.data(), out.size() + 1, fmt, args...);
    return out;
}

} // namespace sisforge

#endif
