#include "mtrack/kalman.hpp"

#include <cmath>
#include <string>

#include "mtrack/error.hpp"

namespace mtrack {

std::string_view to_string(FilterVariant v) noexcept {
    return v == FilterVariant::textbook ? "textbook" : "as-printed";
}

FilterVariant parse_variant(std::string_view name) {
    if (name == "textbook") return FilterVariant::textbook;
    if (name == "as-printed" || name == "as_printed") return FilterVariant::as_printed;
    throw ValidationError("unknown filter variant '" + std::string(name) +
                          "' (expected textbook or as-printed)");
}

StateSpaceModel::StateSpaceModel(const ProcessedDataset& data, const ModelConfig& cfg)
    : data_(&data), cfg_(cfg), noise_(data.N, data.columns()) {
    cfg_.validate();
    data.validate();
    for (std::size_t n = 0; n < data.N; ++n)
        for (std::size_t c = 0; c < data.columns(); ++c)
            noise_(n, c) = 1.0 / std::sqrt(concentration(data.D(n, c), cfg_));
}

std::vector<double> StateSpaceModel::beta(std::span<const double> gamma) const {
    const Matrix& Z = data_->Z.Z;
    if (gamma.size() != Z.cols())
        throw ValidationError("gamma has " + std::to_string(gamma.size()) + " entries, Z has " +
                              std::to_string(Z.cols()) + " columns");
    std::vector<double> b(Z.rows(), 0.0);
    for (std::size_t j = 0; j < Z.rows(); ++j)
        for (std::size_t k = 0; k < Z.cols(); ++k) b[j] += Z(j, k) * gamma[k];
    return b;
}

bool StateSpaceModel::admissible(std::span<const double> gamma) const {
    if (gamma.size() != data_->K()) return false;
    for (double g : gamma)
        if (!std::isfinite(g)) return false;
    if (cfg_.link == Link::gompertz)
        for (double b : beta(gamma))
            if (b < 0.0) return false;
    return true;
}

FilterResult StateSpaceModel::filter(std::span<const double> gamma, FilterVariant variant) const {
    FilterResult fr;
    const std::size_t I = data_->I;
    const std::size_t N = data_->N;
    const std::size_t JI = data_->columns();
    fr.x_hat = Matrix(I, N);
    fr.lambda_hat = Matrix(I, N);
    fr.x_bar = Matrix(I, N);
    fr.lambda_bar = Matrix(I, N);
    fr.y_hat = Matrix(JI, N);
    fr.sigma = Matrix(JI, N);
    fr.loglik = run(gamma, variant, &fr);
    return fr;
}

double StateSpaceModel::loglik(std::span<const double> gamma, FilterVariant variant) const {
    return run(gamma, variant, nullptr);
}

double StateSpaceModel::run(std::span<const double> gamma, FilterVariant variant,
                            FilterResult* out) const {
    const std::vector<double> b = beta(gamma);
    if (cfg_.link == Link::gompertz)
        for (double v : b)
            if (v < 0.0) throw ValidationError("gompertz link needs Z gamma >= 0");

    const std::size_t I = data_->I;
    const std::size_t J = data_->J;
    const std::size_t N = data_->N;
    const double q = variant == FilterVariant::textbook ? cfg_.sigma_x * cfg_.sigma_x : 0.0;
    const double sign = variant == FilterVariant::textbook ? -1.0 : 1.0;
    const double inv_j = 1.0 / static_cast<double>(J);
    const double log_2pi = std::log(2.0 * kPi);

    std::vector<double> x(I, 0.0);
    std::vector<double> lam(I, 1.0);
    double ll = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const auto y = data_->Y.row(n);
        const auto noise = noise_.row(n);
        for (std::size_t i = 0; i < I; ++i) {
            const double xbar = x[i];
            const double lbar = lam[i] + q;
            double dx = 0.0;
            double dl = 0.0;
            for (std::size_t j = 0; j < J; ++j) {
                const std::size_t c = i * J + j;
                const double yhat = gfun(cfg_.link, xbar, b[j]);
                const double sig = lbar + noise[c];
                const double gain = lbar / sig;
                const double resid = y[c] - yhat;
                dx += resid * gain;
                dl += gain * sig * gain;
                ll -= 0.5 * (log_2pi + std::log(sig) + resid * resid / sig);
                if (out) {
                    out->y_hat(c, n) = yhat;
                    out->sigma(c, n) = sig;
                }
            }
            x[i] = xbar + dx * inv_j;
            lam[i] = lbar + sign * dl * inv_j;
            if (out) {
                out->x_bar(i, n) = xbar;
                out->lambda_bar(i, n) = lbar;
                out->x_hat(i, n) = x[i];
                out->lambda_hat(i, n) = lam[i];
            }
        }
    }
    return ll;
}

FilterResult kalman_filter(const ProcessedDataset& data, std::span<const double> gamma,
                           const ModelConfig& cfg, FilterVariant variant) {
    return StateSpaceModel(data, cfg).filter(gamma, variant);
}

double marginal_loglik(const ProcessedDataset& data, std::span<const double> gamma,
                       const ModelConfig& cfg, FilterVariant variant) {
    return StateSpaceModel(data, cfg).loglik(gamma, variant);
}

SmootherResult kalman_smoother(const FilterResult& fr) {
    const std::size_t I = fr.x_hat.rows();
    const std::size_t N = fr.x_hat.cols();
    SmootherResult sr{Matrix(I, N), Matrix(I, N)};
    if (N == 0) return sr;
    for (std::size_t i = 0; i < I; ++i) {
        sr.x_smooth(i, N - 1) = fr.x_hat(i, N - 1);
        sr.lambda_smooth(i, N - 1) = fr.lambda_hat(i, N - 1);
        for (std::size_t n = N - 1; n-- > 0;) {
            const double c = fr.lambda_hat(i, n) / fr.lambda_bar(i, n + 1);
            sr.x_smooth(i, n) = fr.x_hat(i, n) + c * (sr.x_smooth(i, n + 1) - fr.x_bar(i, n + 1));
            sr.lambda_smooth(i, n) =
                fr.lambda_hat(i, n) + c * c * (sr.lambda_smooth(i, n + 1) - fr.lambda_bar(i, n + 1));
        }
    }
    return sr;
}

}  // namespace mtrack
