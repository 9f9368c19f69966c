#pragma once

// Marginal Metropolis-Hastings over gamma with the approximate Kalman
// likelihood, multi-chain orchestration and the posterior summary table.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtrack/diagnostics.hpp"
#include "mtrack/kalman.hpp"
#include "mtrack/matrix.hpp"
#include "mtrack/priors.hpp"

namespace mtrack {

struct RunOptions {
    std::size_t niter = 5000;
    std::size_t nwarmup = 2000;
    std::size_t nchains = 2;
    std::uint64_t seed = 1;
    FilterVariant variant = FilterVariant::textbook;
    std::size_t threads = 0;            // 0: one worker per chain
    std::size_t max_state_draws = 500;  // latent-state storage cap
    std::size_t init_attempts = 100;
};

/// Filtered and smoothed latent states for one retained gamma draw.
struct StateDraw {
    std::size_t draw = 0;  // 0-based index into the pooled (chain-major) draws
    Matrix x_filtered;     // I x N
    Matrix x_smoothed;     // I x N
};

struct PosteriorDraws {
    std::vector<Matrix> gamma;  // per chain, S x K post-warmup draws
    std::vector<std::vector<std::uint8_t>> accepted;
    std::vector<double> accept_rate;
    std::vector<std::uint64_t> chain_seeds;
    std::size_t niter = 0;
    std::size_t nwarmup = 0;
    std::vector<StateDraw> states;

    [[nodiscard]] std::size_t chains() const noexcept { return gamma.size(); }
    [[nodiscard]] std::size_t draws_per_chain() const noexcept { return gamma.empty() ? 0 : gamma.front().rows(); }
    [[nodiscard]] std::size_t total_draws() const noexcept { return chains() * draws_per_chain(); }
    [[nodiscard]] std::size_t K() const noexcept { return gamma.empty() ? 0 : gamma.front().cols(); }

    /// Gamma of the pooled draw `index` (chain-major order).
    [[nodiscard]] std::vector<double> gamma_draw(std::size_t index) const;
    /// Chains of coordinate k, for the diagnostics.
    [[nodiscard]] std::vector<std::vector<double>> coordinate(std::size_t k) const;
    /// Posterior mean of gamma over all draws.
    [[nodiscard]] std::vector<double> gamma_mean() const;
    /// Mean of the stored filtered states (I x N).
    [[nodiscard]] Matrix mean_filtered_states() const;
};

struct FitSummary {
    std::vector<ParameterSummary> params;
};

struct FitResult {
    PosteriorDraws draws;
    FitSummary summary;
    std::vector<std::string> diagnostics;  // empty when every check passed

    [[nodiscard]] bool ok() const noexcept { return diagnostics.empty(); }
};

/// log prior + approximate-Kalman marginal likelihood; -inf outside the support.
[[nodiscard]] double log_posterior(const StateSpaceModel& model, std::span<const PriorSpec> priors,
                                   std::span<const double> gamma, FilterVariant variant);

/// Runs the chains. Diagnostic failures (a chain accepting fewer than 0.1% of
/// post-warmup proposals) are reported in FitResult::diagnostics; a non-finite
/// target at every initialization attempt throws DiagnosticError.
[[nodiscard]] FitResult run_ssm(const ProcessedDataset& data, std::span<const PriorSpec> priors,
                                const ModelConfig& cfg, const RunOptions& opts);

[[nodiscard]] FitSummary summarize_fit(const PosteriorDraws& draws);

/// beta = Z gamma for every pooled draw (total_draws x J).
[[nodiscard]] Matrix beta_draws(const PosteriorDraws& draws, const DesignMatrix& Z);

/// draws.csv, summary.csv, states.csv and beta.csv.
void write_fit(const std::filesystem::path& dir, const FitResult& fit, const DesignMatrix& Z);
/// Reads draws.csv and states.csv back.
[[nodiscard]] PosteriorDraws read_fit(const std::filesystem::path& dir);

}  // namespace mtrack
