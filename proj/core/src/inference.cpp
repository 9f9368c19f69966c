#include "mtrack/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/mcmc.hpp"

namespace mtrack {

std::vector<double> PosteriorDraws::gamma_draw(std::size_t index) const {
    const std::size_t s = draws_per_chain();
    const auto row = gamma.at(index / s).row(index % s);
    return {row.begin(), row.end()};
}

std::vector<std::vector<double>> PosteriorDraws::coordinate(std::size_t k) const {
    std::vector<std::vector<double>> out;
    for (const Matrix& g : gamma) out.push_back(g.col(k));
    return out;
}

std::vector<double> PosteriorDraws::gamma_mean() const {
    std::vector<double> m(K(), 0.0);
    for (const Matrix& g : gamma)
        for (std::size_t s = 0; s < g.rows(); ++s)
            for (std::size_t k = 0; k < g.cols(); ++k) m[k] += g(s, k);
    for (double& v : m) v /= static_cast<double>(total_draws());
    return m;
}

Matrix PosteriorDraws::mean_filtered_states() const {
    if (states.empty()) throw ValidationError("fit has no stored latent states");
    Matrix m(states.front().x_filtered.rows(), states.front().x_filtered.cols());
    for (const auto& sd : states)
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] += sd.x_filtered.data()[i];
    for (double& v : m.data()) v /= static_cast<double>(states.size());
    return m;
}

double log_posterior(const StateSpaceModel& model, std::span<const PriorSpec> priors,
                     std::span<const double> gamma, FilterVariant variant) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    const double lp = log_prior(gamma, priors, model.config().link);
    if (!std::isfinite(lp) || !model.admissible(gamma)) return kNegInf;
    const double ll = model.loglik(gamma, variant);
    return std::isfinite(ll) ? lp + ll : kNegInf;
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads ? threads : count, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

FitResult run_ssm(const ProcessedDataset& data, std::span<const PriorSpec> priors, const ModelConfig& cfg,
                  const RunOptions& opts) {
    if (opts.nwarmup < 1 || opts.niter <= opts.nwarmup)
        throw ValidationError("run_ssm needs niter > nwarmup >= 1");
    if (opts.nchains < 1) throw ValidationError("run_ssm needs at least one chain");
    if (priors.size() != data.K())
        throw ValidationError("expected " + std::to_string(data.K()) + " priors (one per Z column), got " +
                              std::to_string(priors.size()));

    const StateSpaceModel model(data, cfg);
    const LogDensity target = [&](std::span<const double> g) {
        return log_posterior(model, priors, g, opts.variant);
    };

    FitResult fit;
    PosteriorDraws& pd = fit.draws;
    pd.niter = opts.niter;
    pd.nwarmup = opts.nwarmup;
    pd.gamma.resize(opts.nchains);
    pd.accepted.resize(opts.nchains);
    pd.accept_rate.resize(opts.nchains);
    pd.chain_seeds.resize(opts.nchains);

    MetropolisSettings settings;
    settings.niter = opts.niter;
    settings.nwarmup = opts.nwarmup;

    parallel_for(opts.nchains, opts.threads, [&](std::size_t c) {
        const std::uint64_t seed = derive_seed(opts.seed, c + 1);
        pd.chain_seeds[c] = seed;
        Rng rng(seed);
        std::vector<double> init(data.K());
        bool ok = false;
        for (std::size_t attempt = 0; attempt < opts.init_attempts && !ok; ++attempt) {
            for (std::size_t k = 0; k < init.size(); ++k) init[k] = priors[k].sample(rng);
            ok = std::isfinite(target(init));
        }
        if (!ok)
            throw DiagnosticError("chain " + std::to_string(c + 1) + ": no finite starting point after " +
                                  std::to_string(opts.init_attempts) + " prior draws");
        ChainResult cr = run_metropolis(target, std::move(init), settings, rng);
        pd.gamma[c] = std::move(cr.draws);
        pd.accepted[c] = std::move(cr.accepted);
        pd.accept_rate[c] = cr.accept_rate;
    });

    for (std::size_t c = 0; c < opts.nchains; ++c)
        if (pd.accept_rate[c] < 1e-3)
            fit.diagnostics.push_back("chain " + std::to_string(c + 1) + " accepted " +
                                      std::to_string(pd.accept_rate[c]) + " of post-warmup proposals");

    // Latent states for an evenly thinned subset of the pooled draws.
    const std::size_t total = pd.total_draws();
    const std::size_t keep = std::min(opts.max_state_draws, total);
    pd.states.resize(keep);
    parallel_for(keep, opts.threads ? opts.threads : 1, [&](std::size_t s) {
        const std::size_t idx = s * total / keep;
        const auto g = pd.gamma_draw(idx);
        const FilterResult fr = model.filter(g, opts.variant);
        SmootherResult sr = kalman_smoother(fr);
        pd.states[s] = {idx, fr.x_hat, std::move(sr.x_smooth)};
    });

    fit.summary = summarize_fit(pd);
    return fit;
}

FitSummary summarize_fit(const PosteriorDraws& draws) {
    FitSummary s;
    for (std::size_t k = 0; k < draws.K(); ++k) {
        const auto chains = draws.coordinate(k);
        s.params.push_back(summarize("gamma[" + std::to_string(k + 1) + "]", chains));
    }
    return s;
}

Matrix beta_draws(const PosteriorDraws& draws, const DesignMatrix& Z) {
    const std::size_t J = Z.Z.rows();
    if (Z.Z.cols() != draws.K()) throw ValidationError("beta_draws: Z does not match gamma");
    Matrix out(draws.total_draws(), J);
    std::size_t r = 0;
    for (const Matrix& g : draws.gamma)
        for (std::size_t s = 0; s < g.rows(); ++s, ++r)
            for (std::size_t j = 0; j < J; ++j) {
                double b = 0.0;
                for (std::size_t k = 0; k < g.cols(); ++k) b += Z.Z(j, k) * g(s, k);
                out(r, j) = b;
            }
    return out;
}

void write_fit(const std::filesystem::path& dir, const FitResult& fit, const DesignMatrix& Z) {
    std::filesystem::create_directories(dir);
    const PosteriorDraws& pd = fit.draws;
    const std::size_t K = pd.K();

    {
        std::ofstream out(dir / "draws.csv", std::ios::binary);
        std::vector<std::string> row{"chain", "iter"};
        for (std::size_t k = 0; k < K; ++k) row.push_back("gamma_" + std::to_string(k + 1));
        row.push_back("accept");
        csv::write_row(out, row);
        for (std::size_t c = 0; c < pd.chains(); ++c)
            for (std::size_t s = 0; s < pd.draws_per_chain(); ++s) {
                row.clear();
                row.push_back(std::to_string(c + 1));
                row.push_back(std::to_string(pd.nwarmup + s + 1));
                for (std::size_t k = 0; k < K; ++k) row.push_back(csv::format_double(pd.gamma[c](s, k)));
                row.push_back(std::to_string(pd.accepted[c][s]));
                csv::write_row(out, row);
            }
    }
    {
        std::ofstream out(dir / "summary.csv", std::ios::binary);
        csv::write_row(out, std::vector<std::string>{"parameter", "mean", "se_mean", "sd", "2.5%", "25%", "50%",
                                                     "75%", "97.5%", "n_eff", "Rhat"});
        for (const auto& p : fit.summary.params) {
            std::vector<std::string> row{p.name, csv::format_double(p.mean), csv::format_double(p.se_mean),
                                         csv::format_double(p.sd)};
            for (double q : p.quantiles) row.push_back(csv::format_double(q));
            row.push_back(csv::format_double(p.n_eff));
            row.push_back(csv::format_double(p.rhat));
            csv::write_row(out, row);
        }
    }
    {
        std::ofstream out(dir / "states.csv", std::ios::binary);
        csv::write_row(out, std::vector<std::string>{"draw", "subject", "timestep", "x_filtered", "x_smoothed"});
        std::string line;
        for (const auto& sd : pd.states)
            for (std::size_t i = 0; i < sd.x_filtered.rows(); ++i)
                for (std::size_t n = 0; n < sd.x_filtered.cols(); ++n) {
                    line = std::to_string(sd.draw + 1) + ',' + std::to_string(i + 1) + ',' + std::to_string(n + 1) +
                           ',' + csv::format_double(sd.x_filtered(i, n)) + ',' +
                           csv::format_double(sd.x_smoothed(i, n)) + '\n';
                    out << line;
                }
    }
    {
        const Matrix beta = beta_draws(pd, Z);
        std::vector<std::string> header;
        for (std::size_t j = 0; j < beta.cols(); ++j) header.push_back("beta_" + std::to_string(j + 1));
        csv::write_matrix(dir / "beta.csv", beta, header);
    }
}

PosteriorDraws read_fit(const std::filesystem::path& dir) {
    PosteriorDraws pd;
    const csv::Table draws = csv::read_table(dir / "draws.csv");
    if (draws.header.size() < 4 || draws.header[0] != "chain" || draws.header[1] != "iter" ||
        draws.header.back() != "accept")
        throw ValidationError("draws.csv: expected columns chain,iter,gamma_1..gamma_K,accept");
    const std::size_t K = draws.header.size() - 3;

    std::map<long long, std::vector<std::vector<double>>> by_chain;
    std::map<long long, std::vector<std::uint8_t>> acc;
    long long min_iter = std::numeric_limits<long long>::max();
    long long max_iter = 0;
    for (const auto& row : draws.rows) {
        const long long c = csv::parse_int(row[0]);
        const long long it = csv::parse_int(row[1]);
        min_iter = std::min(min_iter, it);
        max_iter = std::max(max_iter, it);
        std::vector<double> g(K);
        for (std::size_t k = 0; k < K; ++k) g[k] = csv::parse_double(row[2 + k]);
        by_chain[c].push_back(std::move(g));
        acc[c].push_back(static_cast<std::uint8_t>(csv::parse_int(row.back())));
    }
    if (by_chain.empty()) throw ValidationError("draws.csv has no draws");
    for (auto& [c, rows] : by_chain) {
        Matrix m(rows.size(), K);
        for (std::size_t s = 0; s < rows.size(); ++s)
            for (std::size_t k = 0; k < K; ++k) m(s, k) = rows[s][k];
        if (!pd.gamma.empty() && m.rows() != pd.gamma.front().rows())
            throw ValidationError("draws.csv: chains have different lengths");
        pd.gamma.push_back(std::move(m));
        const auto& a = acc[c];
        pd.accept_rate.push_back(static_cast<double>(std::count(a.begin(), a.end(), 1)) /
                                 static_cast<double>(a.size()));
        pd.accepted.push_back(a);
    }
    pd.nwarmup = static_cast<std::size_t>(min_iter - 1);
    pd.niter = static_cast<std::size_t>(max_iter);

    const csv::Table states = csv::read_table(dir / "states.csv");
    std::map<long long, std::vector<std::array<double, 4>>> by_draw;
    std::size_t I = 0;
    std::size_t N = 0;
    for (const auto& row : states.rows) {
        const long long d = csv::parse_int(row[0]);
        const auto i = static_cast<std::size_t>(csv::parse_int(row[1]));
        const auto n = static_cast<std::size_t>(csv::parse_int(row[2]));
        I = std::max(I, i);
        N = std::max(N, n);
        by_draw[d].push_back({static_cast<double>(i), static_cast<double>(n), csv::parse_double(row[3]),
                              csv::parse_double(row[4])});
    }
    for (const auto& [d, rows] : by_draw) {
        StateDraw sd{static_cast<std::size_t>(d - 1), Matrix(I, N), Matrix(I, N)};
        if (sd.draw >= pd.total_draws()) throw ValidationError("states.csv references a missing draw");
        for (const auto& r : rows) {
            const auto i = static_cast<std::size_t>(r[0]) - 1;
            const auto n = static_cast<std::size_t>(r[1]) - 1;
            sd.x_filtered(i, n) = r[2];
            sd.x_smoothed(i, n) = r[3];
        }
        pd.states.push_back(std::move(sd));
    }
    return pd;
}

}  // namespace mtrack
