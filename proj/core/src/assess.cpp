#include "mtrack/assess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "meta_json.hpp"
#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/model.hpp"
#include "mtrack/simulate.hpp"

namespace mtrack {

namespace {

constexpr double kLogitCap = 709.0;

double residual_ratio(const Matrix& y_sim, const Matrix& y, std::size_t c0, std::size_t c1) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 0; n < y.rows(); ++n)
        for (std::size_t c = c0; c < c1; ++c) {
            const double d = y_sim(n, c) - y(n, c);
            num += d * d;
            den += y(n, c) * y(n, c);
        }
    if (!(den > 0.0)) throw ValidationError("PA index undefined: observed matrix has zero norm");
    return num / den;
}

}  // namespace

double pa_overall(const Matrix& y_sim, const Matrix& y) {
    if (y_sim.rows() != y.rows() || y_sim.cols() != y.cols())
        throw ValidationError("pa_overall: matrices differ in shape");
    return 1.0 - residual_ratio(y_sim, y, 0, y.cols());
}

double pa_subject(const Matrix& y_sim, const Matrix& y, std::size_t subject, std::size_t J) {
    if (y_sim.rows() != y.rows() || y_sim.cols() != y.cols())
        throw ValidationError("pa_subject: matrices differ in shape");
    if (J == 0 || (subject + 1) * J > y.cols())
        throw ValidationError("pa_subject: subject index " + std::to_string(subject) + " out of range");
    return 1.0 - residual_ratio(y_sim, y, subject * J, (subject + 1) * J);
}

double dtw_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("dtw_distance: empty series");
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t m = b.size();
    std::vector<double> prev(m, inf);
    std::vector<double> cur(m, inf);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = std::abs(a[i] - b[j]);
            if (i == 0 && j == 0) {
                cur[j] = d;
                continue;
            }
            double best = inf;
            if (i > 0 && j > 0) best = prev[j - 1] + 2.0 * d;
            if (i > 0) best = std::min(best, prev[j] + d);
            if (j > 0) best = std::min(best, cur[j - 1] + d);
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return prev[m - 1] / static_cast<double>(a.size() + b.size());
}

Evaluation evaluate_ssm(const PosteriorDraws& fit, const ProcessedDataset& data, const ModelConfig& cfg,
                        std::size_t M, std::uint64_t seed, std::size_t threads) {
    if (M == 0) throw ValidationError("evaluate_ssm: M must be at least 1");
    if (fit.states.empty()) throw ValidationError("evaluate_ssm: fit carries no latent-state draws");
    if (fit.K() != data.K()) throw ValidationError("evaluate_ssm: fit and dataset disagree on K");
    cfg.validate();
    data.validate();
    const std::size_t I = data.I;
    const std::size_t J = data.J;
    const std::size_t JI = data.columns();

    Evaluation ev;
    ev.pa_overall.assign(M, 0.0);
    ev.pa_subject = Matrix(M, I);
    ev.dtw = Matrix(M, JI);

    const StateSpaceModel model(data, cfg);
    auto one = [&](std::size_t m) {
        Rng rng = make_rng(seed, m);
        std::uniform_int_distribution<std::size_t> pick(0, fit.states.size() - 1);
        const StateDraw& sd = fit.states[pick(rng)];
        if (sd.x_filtered.rows() != I || sd.x_filtered.cols() != data.N)
            throw ValidationError("evaluate_ssm: stored states do not match the dataset shape");
        const auto beta = model.beta(fit.gamma_draw(sd.draw));
        const Matrix mu = link_angles(sd.x_filtered, beta, cfg.link);
        Matrix ysim(data.N, JI);
        for (std::size_t n = 0; n < data.N; ++n)
            for (std::size_t c = 0; c < JI; ++c) {
                const double loc = mu(n, c);
                const double kappa = concentration(compute_d(clamp_to_arc(loc)), cfg);
                ysim(n, c) = clamp_to_arc(vonmises_sample(loc, kappa, rng));
            }
        ev.pa_overall[m] = pa_overall(ysim, data.Y);
        for (std::size_t i = 0; i < I; ++i) ev.pa_subject(m, i) = pa_subject(ysim, data.Y, i, J);
        for (std::size_t c = 0; c < JI; ++c) ev.dtw(m, c) = dtw_distance(ysim.col(c), data.Y.col(c));
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, M));
    if (workers == 1) {
        for (std::size_t m = 0; m < M; ++m) one(m);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t m = w; m < M; m += workers) one(m);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    // Fixed-order sums keep the means independent of the worker count.
    double s = 0.0;
    for (double v : ev.pa_overall) s += v;
    ev.mean_pa_overall = s / static_cast<double>(M);
    ev.mean_pa_subject_by_subject.assign(I, 0.0);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t i = 0; i < I; ++i) ev.mean_pa_subject_by_subject[i] += ev.pa_subject(m, i);
    double all = 0.0;
    for (double& v : ev.mean_pa_subject_by_subject) {
        all += v;
        v /= static_cast<double>(M);
    }
    ev.mean_pa_subject = all / static_cast<double>(M * I);
    double d = 0.0;
    for (double v : ev.dtw.data()) d += v;
    ev.mean_dtw = d / static_cast<double>(ev.dtw.size());
    return ev;
}

void write_evaluation(const std::filesystem::path& dir, const Evaluation& ev, const ProcessedDataset& data) {
    std::filesystem::create_directories(dir);
    const std::size_t M = ev.pa_overall.size();
    Matrix pa(M, 2);
    for (std::size_t m = 0; m < M; ++m) {
        pa(m, 0) = static_cast<double>(m + 1);
        pa(m, 1) = ev.pa_overall[m];
    }
    csv::write_matrix(dir / "PA_ov.csv", pa, std::vector<std::string>{"m", "PA_ov"});
    std::vector<std::string> sh;
    for (int id : data.subject_ids) sh.push_back("s" + std::to_string(id));
    csv::write_matrix(dir / "PA_sbj.csv", ev.pa_subject, sh);
    csv::write_matrix(dir / "DTW.csv", ev.dtw, column_labels(data));

    nlohmann::json doc;
    doc["M"] = M;
    doc["indices"]["PA_ov"] = ev.mean_pa_overall;
    doc["indices"]["PA_sbj"]["per_subject"] = ev.mean_pa_subject_by_subject;
    doc["indices"]["PA_sbj"]["mean"] = ev.mean_pa_subject;
    doc["indices"]["DTW"] = ev.mean_dtw;
    doc["dist"]["PA_ov"] = "PA_ov.csv";
    doc["dist"]["PA_sbj"] = "PA_sbj.csv";
    doc["dist"]["DTW"] = "DTW.csv";
    detail::write_json(dir / "evaluation.json", doc);
}

void write_evidence(const std::filesystem::path& path, std::span<const EvidenceRow> rows,
                    std::span<const Window> windows, std::span<const int> subject_ids) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    csv::write_row(out, std::vector<std::string>{"window", "lo", "hi", "sbj", "level", "p", "r"});
    for (const auto& r : rows) {
        const int sbj = r.subject < subject_ids.size() ? subject_ids[r.subject] : static_cast<int>(r.subject + 1);
        csv::write_row(out, std::vector<std::string>{"W" + std::to_string(r.window + 1), csv::format_double(windows[r.window].lo),
                             csv::format_double(windows[r.window].hi), std::to_string(sbj),
                             "gamma_" + std::to_string(r.level + 1), csv::format_double(r.p),
                             csv::format_double(r.r)});
    }
}

std::vector<Window> default_windows() { return {{10, 35}, {45, 65}, {70, 85}}; }

std::vector<Window> parse_windows(std::string_view text) {
    std::vector<Window> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string_view item = text.substr(pos, comma - pos);
        const std::size_t colon = item.find(':');
        if (colon == std::string_view::npos)
            throw ParseError("window '" + std::string(item) + "' must look like lo:hi", pos);
        Window w;
        try {
            w.lo = csv::parse_double(item.substr(0, colon));
            w.hi = csv::parse_double(item.substr(colon + 1));
        } catch (const ValidationError&) {
            throw ParseError("window '" + std::string(item) + "' has a non-numeric bound", pos);
        }
        if (!(w.lo >= 0.0 && w.hi <= 100.0 && w.lo <= w.hi))
            throw ParseError("window bounds must satisfy 0 <= lo <= hi <= 100", pos);
        out.push_back(w);
        pos = comma + 1;
    }
    return out;
}

std::vector<std::size_t> window_steps(const Window& w, std::size_t N) {
    std::vector<std::size_t> steps;
    if (N == 0) return steps;
    for (std::size_t n = 0; n < N; ++n) {
        const double pct = N == 1 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(N - 1);
        if (pct >= w.lo && pct <= w.hi) steps.push_back(n);
    }
    return steps;
}

std::vector<EvidenceRow> evidence_analysis(const Matrix& x_hat, std::span<const Window> windows,
                                           std::span<const double> gamma_hat, Link link) {
    if (link != Link::logistic)
        throw UnsupportedError("evidence analysis is only defined for the logistic link");
    std::vector<EvidenceRow> rows;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto steps = window_steps(windows[w], x_hat.cols());
        if (steps.empty())
            throw ValidationError("window " + std::to_string(w + 1) + " contains no time steps");
        for (std::size_t i = 0; i < x_hat.rows(); ++i)
            for (std::size_t k = 0; k < gamma_hat.size(); ++k) {
                double p = 0.0;
                for (std::size_t n : steps) {
                    const double z = std::clamp(x_hat(i, n) - gamma_hat[k], -kLogitCap, kLogitCap);
                    p += 1.0 / (1.0 + std::exp(z));
                }
                p /= static_cast<double>(steps.size());
                const double r = std::clamp(std::log(p) - std::log1p(-p), -kLogitCap, kLogitCap);
                rows.push_back({w, i, k, p, r});
            }
    }
    return rows;
}

}  // namespace mtrack
