#include "mtrack/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtrack/error.hpp"

namespace mtrack {

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var_of(std::span<const double> v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

std::size_t common_length(std::span<const std::vector<double>> chains) {
    if (chains.empty()) throw ValidationError("diagnostics need at least one chain");
    const std::size_t n = chains.front().size();
    for (const auto& c : chains)
        if (c.size() != n) throw ValidationError("diagnostics need chains of equal length");
    return n;
}

}  // namespace

double split_rhat(std::span<const std::vector<double>> chains) {
    const std::size_t n = common_length(chains) / 2 * 2;
    if (n < 4) throw ValidationError("split_rhat needs at least 4 draws per chain");
    const std::size_t half = n / 2;

    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& c : chains)
        for (std::size_t h = 0; h < 2; ++h) {
            const std::span<const double> part(c.data() + h * half, half);
            const double m = mean_of(part);
            means.push_back(m);
            vars.push_back(var_of(part, m));
        }
    const double W = mean_of(vars);
    if (!(W > 0.0)) return std::numeric_limits<double>::infinity();
    const double nh = static_cast<double>(half);
    const double B = nh * var_of(means, mean_of(means));
    const double var_plus = (nh - 1.0) / nh * W + B / nh;
    return std::sqrt(var_plus / W);
}

double effective_n(std::span<const std::vector<double>> chains) {
    const std::size_t n = common_length(chains);
    const std::size_t m = chains.size();
    if (n < 2) return 0.0;
    const double nd = static_cast<double>(n);

    std::vector<double> means(m);
    std::vector<double> vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean_of(chains[c]);
        vars[c] = var_of(chains[c], means[c]);
    }
    const double W = mean_of(vars);
    const double B = m > 1 ? nd * var_of(means, mean_of(means)) : 0.0;
    const double var_plus = (nd - 1.0) / nd * W + B / nd;
    if (!(W > 0.0) || !(var_plus > 0.0)) return 0.0;

    // rho_t = 1 - (W - mean_c acov_c(t)) / var_plus with biased autocovariances; rho_0 = 1.
    auto rho = [&](std::size_t lag) {
        if (lag == 0) return 1.0;
        double acov = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const auto& x = chains[c];
            double s = 0.0;
            for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - means[c]) * (x[t + lag] - means[c]);
            acov += s / nd;
        }
        acov /= static_cast<double>(m);
        return 1.0 - (W - acov) / var_plus;
    };

    // Geyer: sum pairs rho_2t + rho_2t+1 while positive, forced non-increasing.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; 2 * t + 1 < n; ++t) {
        double pair = rho(2 * t) + rho(2 * t + 1);
        if (!(pair > 0.0)) break;
        pair = std::min(pair, prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    const double total = static_cast<double>(m) * nd;
    if (!(tau > 0.0)) return total;
    return std::min(total, total / tau);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ParameterSummary summarize(std::string name, std::span<const std::vector<double>> chains) {
    ParameterSummary s;
    s.name = std::move(name);
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    if (pooled.size() < 2) throw ValidationError("summary needs at least 2 draws");
    s.mean = mean_of(pooled);
    s.sd = std::sqrt(var_of(pooled, s.mean));
    for (std::size_t q = 0; q < kSummaryProbs.size(); ++q) s.quantiles[q] = quantile(pooled, kSummaryProbs[q]);
    s.n_eff = effective_n(chains);
    s.se_mean = s.n_eff > 0.0 ? s.sd / std::sqrt(s.n_eff) : std::numeric_limits<double>::infinity();
    s.rhat = common_length(chains) >= 4 ? split_rhat(chains) : std::numeric_limits<double>::quiet_NaN();
    return s;
}

}  // namespace mtrack
