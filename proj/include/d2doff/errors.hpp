#pragma once

#include <stdexcept>
#include <string>

namespace d2doff {

/// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Integral diverges for the given inputs (e.g. speed support touching zero).
class divergence_error : public domain_error {
public:
    using domain_error::domain_error;
};

/// A numerical routine (quadrature, search) failed to reach its tolerance.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration; `line()` is 0 when the value did not come from a file.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
        , line_(line)
    {
    }

    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace d2doff
