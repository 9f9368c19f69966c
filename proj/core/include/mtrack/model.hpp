#pragma once

// Model kernels: link functions, distance transform, concentration map and
// the von Mises density/sampler. Everything here is pure given its inputs.

#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "mtrack/rng.hpp"

namespace mtrack {

inline constexpr double kPi = std::numbers::pi;

/// Smallest admissible angle; non-positive angles are clamped here.
inline constexpr double kAngleFloor = 1e-4;

enum class Link { logistic, gompertz };

[[nodiscard]] std::string_view to_string(Link link) noexcept;
/// Accepts "logistic" or "gompertz"; throws ValidationError otherwise.
[[nodiscard]] Link parse_link(std::string_view name);

struct KappaBounds {
    double lb = 5.0;
    double ub = 300.0;
};

struct ModelConfig {
    Link link = Link::logistic;
    double sigma_x = 1.0;  // innovation sd of the latent random walk
    double lambda = 1.0;   // concentration rate
    KappaBounds kappa_bounds;

    /// Throws ValidationError when a field breaks its invariant.
    void validate() const;
};

/// pi / (1 + exp(beta - x)). Saturates to 0 or pi instead of overflowing.
[[nodiscard]] double gfun_logistic(double x, double beta) noexcept;

/// pi * exp(-beta * exp(x)); requires beta >= 0.
[[nodiscard]] double gfun_gompertz(double x, double beta);

[[nodiscard]] double gfun(Link link, double x, double beta);

/// Distance of an angle to the opposite pole: |y - 3pi/4| below pi/2,
/// |y - pi/4| otherwise. Requires y in (0, pi].
[[nodiscard]] double compute_d(double y);
[[nodiscard]] std::vector<double> compute_D(std::span<const double> y);

/// Maps d in (0, pi] onto [lb, ub]:
///   lb + (ub - lb) * (exp(lambda d) - 1) / (exp(lambda pi) - 1).
[[nodiscard]] double concentration(double d, const ModelConfig& cfg);

/// log I0(x) for x >= 0. Power series below 15, asymptotic expansion above.
[[nodiscard]] double log_bessel_i0(double x);

[[nodiscard]] double vonmises_logpdf(double y, double mu, double kappa);

/// Best-Fisher rejection sampler. The result lies in (mu - pi, mu + pi].
[[nodiscard]] double vonmises_sample(double mu, double kappa, Rng& rng);

/// Clamp a generated angle onto the admissible arc [kAngleFloor, pi].
[[nodiscard]] double clamp_to_arc(double y) noexcept;

/// Angle series of one trajectory. Every value lies in (0, pi].
class AngleSeries {
public:
    AngleSeries() = default;
    /// Throws ValidationError if any value is outside (0, pi].
    explicit AngleSeries(std::vector<double> values);

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<double> values_;
};

}  // namespace mtrack
