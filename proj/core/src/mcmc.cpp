#include "mtrack/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtrack/error.hpp"

namespace mtrack {

namespace {

struct WarmupPlan {
    std::size_t init_buffer = 0;
    std::size_t term_buffer = 0;
    std::size_t base_window = 0;
};

WarmupPlan plan_warmup(std::size_t nwarmup) {
    if (nwarmup >= 150) return {75, 50, 25};
    if (nwarmup < 20) return {nwarmup, 0, 0};
    const auto init = static_cast<std::size_t>(0.15 * static_cast<double>(nwarmup));
    const auto term = static_cast<std::size_t>(0.10 * static_cast<double>(nwarmup));
    return {init, term, nwarmup - init - term};
}

/// Window end points (exclusive) after which the metric is re-estimated.
std::vector<std::size_t> window_ends(std::size_t nwarmup) {
    const WarmupPlan p = plan_warmup(nwarmup);
    std::vector<std::size_t> ends;
    if (p.base_window == 0) return ends;
    const std::size_t slow_end = nwarmup - p.term_buffer;
    std::size_t start = p.init_buffer;
    std::size_t size = p.base_window;
    while (start < slow_end) {
        std::size_t end = start + size;
        // Stretch the window when the next one would not fit.
        if (end + 2 * size > slow_end) end = slow_end;
        ends.push_back(end);
        start = end;
        size *= 2;
    }
    return ends;
}

double safe(double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; }

}  // namespace

ChainResult run_metropolis(const LogDensity& target, std::vector<double> init,
                           const MetropolisSettings& settings, Rng& rng) {
    const std::size_t dim = init.size();
    if (dim == 0) throw ValidationError("metropolis: empty parameter vector");
    if (settings.niter <= settings.nwarmup)
        throw ValidationError("metropolis: niter must exceed nwarmup");

    std::vector<double> sd = settings.initial_sd.empty() ? std::vector<double>(dim, 0.1) : settings.initial_sd;
    if (sd.size() != dim) throw ValidationError("metropolis: initial_sd has the wrong size");

    const double base_log_scale = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
    double log_scale = base_log_scale;
    std::size_t rm_step = 0;

    std::vector<double> current = std::move(init);
    double current_lp = safe(target(current));
    if (!std::isfinite(current_lp)) throw DiagnosticError("metropolis: target is not finite at the initial point");

    const auto ends = window_ends(settings.nwarmup);
    std::size_t next_window = 0;
    std::vector<double> win_mean(dim, 0.0);
    std::vector<double> win_m2(dim, 0.0);
    std::size_t win_n = 0;
    const WarmupPlan plan = plan_warmup(settings.nwarmup);

    ChainResult out;
    out.draws = Matrix(settings.niter - settings.nwarmup, dim);
    out.accepted.reserve(settings.niter - settings.nwarmup);

    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::vector<double> proposal(dim);
    std::size_t warm_accepts = 0;
    std::size_t post_accepts = 0;

    for (std::size_t it = 0; it < settings.niter; ++it) {
        const double scale = std::exp(log_scale);
        for (std::size_t k = 0; k < dim; ++k) proposal[k] = current[k] + scale * sd[k] * stdnorm(rng);
        const double prop_lp = safe(target(proposal));
        const double log_ratio = prop_lp - current_lp;
        const double alpha = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
        const bool accept = std::log(uniform_open(rng)) < log_ratio;
        if (accept) {
            current.swap(proposal);
            current_lp = prop_lp;
        }

        if (it < settings.nwarmup) {
            warm_accepts += accept;
            ++rm_step;
            log_scale += std::pow(static_cast<double>(rm_step), -0.6) * (alpha - settings.target_accept);

            if (next_window < ends.size() && it >= plan.init_buffer) {
                ++win_n;
                for (std::size_t k = 0; k < dim; ++k) {
                    const double delta = current[k] - win_mean[k];
                    win_mean[k] += delta / static_cast<double>(win_n);
                    win_m2[k] += delta * (current[k] - win_mean[k]);
                }
                if (it + 1 == ends[next_window]) {
                    if (win_n >= 10) {
                        const double n = static_cast<double>(win_n);
                        for (std::size_t k = 0; k < dim; ++k) {
                            const double var = win_m2[k] / (n - 1.0);
                            // shrink toward a small default like Stan's metric regularization
                            const double reg = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
                            sd[k] = std::sqrt(reg);
                        }
                        log_scale = base_log_scale;
                        rm_step = 0;
                    }
                    std::fill(win_mean.begin(), win_mean.end(), 0.0);
                    std::fill(win_m2.begin(), win_m2.end(), 0.0);
                    win_n = 0;
                    ++next_window;
                }
            }
        } else {
            const std::size_t s = it - settings.nwarmup;
            auto row = out.draws.row(s);
            std::copy(current.begin(), current.end(), row.begin());
            out.accepted.push_back(accept ? 1 : 0);
            post_accepts += accept;
        }
    }

    out.accept_rate = static_cast<double>(post_accepts) / static_cast<double>(settings.niter - settings.nwarmup);
    out.warmup_accept_rate =
        settings.nwarmup ? static_cast<double>(warm_accepts) / static_cast<double>(settings.nwarmup) : 0.0;
    const double scale = std::exp(log_scale);
    for (double& v : sd) v *= scale;
    out.proposal_sd = std::move(sd);
    return out;
}

}  // namespace mtrack
