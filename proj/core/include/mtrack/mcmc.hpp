#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mtrack/matrix.hpp"
#include "mtrack/rng.hpp"

namespace mtrack {

using LogDensity = std::function<double(std::span<const double>)>;

struct MetropolisSettings {
    std::size_t niter = 5000;
    std::size_t nwarmup = 2000;
    double target_accept = 0.234;
    /// Starting per-coordinate proposal sd; 0.1 for every coordinate when empty.
    std::vector<double> initial_sd;
};

struct ChainResult {
    Matrix draws;                   // (niter - nwarmup) x dim, post-warmup only
    std::vector<std::uint8_t> accepted;
    double accept_rate = 0.0;       // post-warmup
    double warmup_accept_rate = 0.0;
    std::vector<double> proposal_sd;  // frozen per-coordinate sd after warmup
};

/// Random-walk Metropolis with a diagonal Gaussian proposal. During warmup the
/// global scale follows a Robbins-Monro recursion toward `target_accept`, and
/// the per-coordinate sds are re-estimated from the draws of doubling windows.
/// Everything is frozen after warmup. Non-finite target values reject.
[[nodiscard]] ChainResult run_metropolis(const LogDensity& target, std::vector<double> init,
                                         const MetropolisSettings& settings, Rng& rng);

}  // namespace mtrack
