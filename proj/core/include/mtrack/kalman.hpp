#pragma once

// Approximate Kalman filter for the von Mises state-space model, its Gaussian
// marginal likelihood, and the fixed-interval (RTS) smoother.

#include <span>
#include <string_view>
#include <vector>

#include "mtrack/matrix.hpp"
#include "mtrack/model.hpp"
#include "mtrack/preprocess.hpp"

namespace mtrack {

/// `as_printed` keeps the prediction variance equal to the previous filtered
/// variance and adds the gain term in the update; `textbook` adds sigma_x^2 in
/// prediction and subtracts the gain term.
enum class FilterVariant { as_printed, textbook };

[[nodiscard]] std::string_view to_string(FilterVariant v) noexcept;
[[nodiscard]] FilterVariant parse_variant(std::string_view name);

struct FilterResult {
    Matrix x_hat;       // I x N filtered means
    Matrix lambda_hat;  // I x N filtered variances
    Matrix x_bar;       // I x N one-step predictions
    Matrix lambda_bar;  // I x N predicted variances
    Matrix y_hat;       // JI x N predicted observations
    Matrix sigma;       // JI x N observation variances
    double loglik = 0.0;
};

struct SmootherResult {
    Matrix x_smooth;       // I x N
    Matrix lambda_smooth;  // I x N
};

/// Binds a dataset to a model configuration and caches the observation noise
/// 1/sqrt(kappa(d)), which does not depend on gamma. The dataset must outlive
/// the model.
class StateSpaceModel {
public:
    StateSpaceModel(const ProcessedDataset& data, const ModelConfig& cfg);

    [[nodiscard]] const ProcessedDataset& data() const noexcept { return *data_; }
    [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }

    /// beta = Z gamma (length J). Throws on a dimension mismatch.
    [[nodiscard]] std::vector<double> beta(std::span<const double> gamma) const;

    /// True when gamma has the right size and, for the Gompertz link, Z gamma >= 0.
    [[nodiscard]] bool admissible(std::span<const double> gamma) const;

    [[nodiscard]] FilterResult filter(std::span<const double> gamma, FilterVariant variant) const;

    /// Same recursion as filter() without storing the per-step arrays.
    [[nodiscard]] double loglik(std::span<const double> gamma, FilterVariant variant) const;

private:
    double run(std::span<const double> gamma, FilterVariant variant, FilterResult* out) const;

    const ProcessedDataset* data_;
    ModelConfig cfg_;
    Matrix noise_;  // N x JI
};

[[nodiscard]] FilterResult kalman_filter(const ProcessedDataset& data, std::span<const double> gamma,
                                         const ModelConfig& cfg,
                                         FilterVariant variant = FilterVariant::textbook);

[[nodiscard]] double marginal_loglik(const ProcessedDataset& data, std::span<const double> gamma,
                                     const ModelConfig& cfg,
                                     FilterVariant variant = FilterVariant::textbook);

/// Backward pass with gain lambda_hat(n) / lambda_bar(n+1), anchored at the last
/// filtered step. Uses the prediction arrays stored in `fr`, so it follows
/// whichever variant produced them.
[[nodiscard]] SmootherResult kalman_smoother(const FilterResult& fr);

}  // namespace mtrack
