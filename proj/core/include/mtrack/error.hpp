#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtrack {

/// Bad input: schema violations, out-of-domain arguments, dimension mismatches.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grammar error in a formula or prior string. `position` is a 0-based
/// character offset into the source text.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t position)
        : ValidationError(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// The sampler could not start or failed its post-warmup diagnostics.
class DiagnosticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation is not defined for the current model configuration.
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mtrack
