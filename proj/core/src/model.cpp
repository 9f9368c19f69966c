#include "mtrack/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtrack/error.hpp"

namespace mtrack {

namespace {

constexpr double kBesselCrossover = 15.0;

}  // namespace

std::string_view to_string(Link link) noexcept {
    return link == Link::logistic ? "logistic" : "gompertz";
}

Link parse_link(std::string_view name) {
    if (name == "logistic") return Link::logistic;
    if (name == "gompertz") return Link::gompertz;
    throw ValidationError("unknown gfunction '" + std::string(name) +
                          "' (expected logistic or gompertz)");
}

void ModelConfig::validate() const {
    if (!(sigma_x > 0.0) || !std::isfinite(sigma_x))
        throw ValidationError("sigma_x must be positive and finite");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ValidationError("lambda must be positive and finite");
    if (!(kappa_bounds.lb >= 1.0) || !(kappa_bounds.ub > kappa_bounds.lb) ||
        !std::isfinite(kappa_bounds.ub))
        throw ValidationError("kappa bounds must satisfy 1 <= lb < ub");
}

double gfun_logistic(double x, double beta) noexcept {
    // exp overflow gives +inf and pi/inf == 0, so no branch is needed.
    return kPi / (1.0 + std::exp(beta - x));
}

double gfun_gompertz(double x, double beta) {
    if (!(beta >= 0.0))
        throw ValidationError("gompertz link requires beta >= 0, got " + std::to_string(beta));
    if (beta == 0.0) return kPi;
    return kPi * std::exp(-beta * std::exp(x));
}

double gfun(Link link, double x, double beta) {
    return link == Link::logistic ? gfun_logistic(x, beta) : gfun_gompertz(x, beta);
}

double compute_d(double y) {
    if (!(y > 0.0 && y <= kPi))
        throw ValidationError("angle " + std::to_string(y) + " outside (0, pi]");
    return y < kPi / 2.0 ? std::abs(y - 3.0 * kPi / 4.0) : std::abs(y - kPi / 4.0);
}

std::vector<double> compute_D(std::span<const double> y) {
    std::vector<double> out;
    out.reserve(y.size());
    for (double v : y) out.push_back(compute_d(v));
    return out;
}

double concentration(double d, const ModelConfig& cfg) {
    if (!(d > 0.0 && d <= kPi))
        throw ValidationError("distance " + std::to_string(d) + " outside (0, pi]");
    const auto [lb, ub] = cfg.kappa_bounds;
    const double frac = std::expm1(cfg.lambda * d) / std::expm1(cfg.lambda * kPi);
    return lb + (ub - lb) * frac;
}

double log_bessel_i0(double x) {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw ValidationError("log_bessel_i0 needs a finite non-negative argument");
    if (x < kBesselCrossover) {
        const double q = 0.25 * x * x;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return std::log(sum);
    }
    // e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = term * odd * odd / (8.0 * x * k);
        if (next > term) break;  // series starts diverging
        term = next;
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return x - 0.5 * std::log(2.0 * kPi * x) + std::log(sum);
}

double vonmises_logpdf(double y, double mu, double kappa) {
    if (!std::isfinite(y) || !std::isfinite(mu) || !std::isfinite(kappa))
        throw ValidationError("vonmises_logpdf: non-finite input");
    if (!(kappa > 0.0)) throw ValidationError("vonmises_logpdf: kappa must be positive");
    return kappa * std::cos(y - mu) - std::log(2.0 * kPi) - log_bessel_i0(kappa);
}

double vonmises_sample(double mu, double kappa, Rng& rng) {
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);

    double f = 0.0;
    for (;;) {
        const double u1 = uniform_open(rng);
        const double u2 = uniform_open(rng);
        const double z = std::cos(kPi * u1);
        f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        if (c * (2.0 - c) - u2 > 0.0) break;
        if (std::log(c / u2) + 1.0 - c >= 0.0) break;
    }
    const double u3 = uniform_open(rng);
    const double theta = std::acos(std::clamp(f, -1.0, 1.0));
    double y = u3 > 0.5 ? mu + theta : mu - theta;
    if (y <= mu - kPi) y = mu + kPi;
    return y;
}

double clamp_to_arc(double y) noexcept {
    if (!(y > kAngleFloor)) return kAngleFloor;
    return y > kPi ? kPi : y;
}

AngleSeries::AngleSeries(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
        if (!(v > 0.0 && v <= kPi))
            throw ValidationError("angle " + std::to_string(v) + " outside (0, pi]");
}

}  // namespace mtrack
