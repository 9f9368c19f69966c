#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtrack/model.hpp"
#include "mtrack/rng.hpp"

namespace mtrack {

enum class PriorFamily {
    normal,          // (mu, sigma)
    lognormal,       // (mu, sigma)
    chi_square,      // (nu)
    inv_chi_square,  // (nu)
    gamma,           // (shape, rate)
    exponential,     // (rate)
    uniform,         // (lower, upper)
    cauchy,          // (location, scale)
    student_t,       // (nu, mu, sigma)
};

[[nodiscard]] std::string_view to_string(PriorFamily f) noexcept;

struct PriorSpec {
    PriorFamily dist = PriorFamily::normal;
    std::vector<double> params;
    std::string source;

    /// Log density; -inf outside the support.
    [[nodiscard]] double log_density(double x) const;
    [[nodiscard]] double sample(Rng& rng) const;
};

/// Parses `name(arg, ...)`. Throws ParseError on an unknown name, wrong arity
/// or a non-positive scale.
[[nodiscard]] PriorSpec parse_prior(std::string_view text);

/// normal(0, 10), used for unspecified slots.
[[nodiscard]] PriorSpec default_prior();

/// Empty optionals become the default prior.
[[nodiscard]] std::vector<PriorSpec> resolve_priors(std::span<const std::optional<std::string>> entries);

/// One prior per line; `null`/`NULL` selects the default, `#` starts a comment.
[[nodiscard]] std::vector<std::optional<std::string>> read_priors_file(const std::filesystem::path& path);

/// Sum of per-coordinate log densities. Under the Gompertz link returns -inf
/// unless gamma_k >= -gamma_1 for every k > 1.
[[nodiscard]] double log_prior(std::span<const double> gamma, std::span<const PriorSpec> priors, Link link);

}  // namespace mtrack
