#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace mtrack {

/// Split-Rhat: every chain is cut in half (odd lengths drop the last draw)
/// and sqrt(var_plus / W) is computed over the 2m halves. Returns +inf when
/// every half has zero variance.
[[nodiscard]] double split_rhat(std::span<const std::vector<double>> chains);

/// m*n / (1 + 2 sum rho_t), rho estimated across chains and truncated with
/// Geyer's initial monotone positive sequence. Capped at m*n; 0 when the
/// draws have no variance.
[[nodiscard]] double effective_n(std::span<const std::vector<double>> chains);

/// Linear-interpolation quantile (R type 7) of an unsorted sample.
[[nodiscard]] double quantile(std::vector<double> values, double p);

inline constexpr std::array<double, 5> kSummaryProbs{0.025, 0.25, 0.5, 0.75, 0.975};

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double se_mean = 0.0;
    double sd = 0.0;
    std::array<double, 5> quantiles{};
    double n_eff = 0.0;
    double rhat = 0.0;
};

[[nodiscard]] ParameterSummary summarize(std::string name, std::span<const std::vector<double>> chains);

}  // namespace mtrack
