#include <cmath>
#include <functional>

#include "doctest.h"
#include "test_support.hpp"

#include "mtrack/assess.hpp"
#include "mtrack/error.hpp"
#include "mtrack/inference.hpp"

using namespace mtrack;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0);
    std::uniform_real_distribution<double> u(0.01, kPi);
    Matrix m(r, c);
    for (double& v : m.data()) v = u(rng);
    return m;
}

/// Minimum over every monotone connected warping path of the symmetric2 cost.
double dtw_brute(const std::vector<double>& a, const std::vector<double>& b) {
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double cost) {
        if (i == a.size() - 1 && j == b.size() - 1) {
            best = std::min(best, cost);
            return;
        }
        if (i + 1 < a.size()) walk(i + 1, j, cost + std::abs(a[i + 1] - b[j]));
        if (j + 1 < b.size()) walk(i, j + 1, cost + std::abs(a[i] - b[j + 1]));
        if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, cost + 2.0 * std::abs(a[i + 1] - b[j + 1]));
    };
    walk(0, 0, std::abs(a[0] - b[0]));
    return best / static_cast<double>(a.size() + b.size());
}

}  // namespace

TEST_CASE("PA indices") {
    const Matrix y = random_matrix(10, 6, 1);
    CHECK(pa_overall(y, y) == 1.0);
    CHECK(pa_overall(Matrix(10, 6), y) == 0.0);
    Matrix twice = y;
    for (double& v : twice.data()) v *= 2.0;
    CHECK(pa_overall(twice, y) == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS((void)pa_overall(y, Matrix(10, 6)), ValidationError);
    CHECK_THROWS_AS((void)pa_overall(Matrix(10, 5), y), ValidationError);

    for (std::size_t i = 0; i < 3; ++i) CHECK(pa_subject(y, y, i, 2) == 1.0);
    const Matrix sim = random_matrix(10, 6, 2);
    CHECK(pa_subject(sim, y, 0, 6) == pa_overall(sim, y));
    Matrix half = y;
    for (std::size_t n = 0; n < 10; ++n)
        for (std::size_t c = 3; c < 6; ++c) half(n, c) = 0.0;
    CHECK(pa_subject(half, y, 0, 3) == 1.0);
    CHECK(pa_subject(half, y, 1, 3) == 0.0);
    CHECK_THROWS_AS((void)pa_subject(y, y, 3, 2), ValidationError);

    // aggregation identity from per-subject residual norms
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < 6; ++c)
        for (std::size_t n = 0; n < 10; ++n) {
            num += (sim(n, c) - y(n, c)) * (sim(n, c) - y(n, c));
            den += y(n, c) * y(n, c);
        }
    CHECK(pa_overall(sim, y) == doctest::Approx(1.0 - num / den).epsilon(1e-14));
}

TEST_CASE("DTW") {
    const std::vector<double> a{0.3, 1.2, 2.0, 0.5};
    CHECK(dtw_distance(a, a) == 0.0);
    CHECK(dtw_distance(std::vector<double>{0.0}, std::vector<double>{1.0}) == 0.5);
    const std::vector<double> b{0.1, 0.9, 2.5};
    CHECK(dtw_distance(a, b) == dtw_distance(b, a));
    CHECK(dtw_distance(a, b) == dtw_brute(a, b));
    CHECK_THROWS_AS((void)dtw_distance(std::vector<double>{}, a), ValidationError);

    Rng rng = make_rng(5, 5);
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_real_distribution<double> u(0.0, kPi);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> x(len(rng)), y(len(rng));
        for (double& v : x) v = u(rng);
        for (double& v : y) v = u(rng);
        CHECK(dtw_distance(x, y) == dtw_brute(x, y));
    }
}

TEST_CASE("windows") {
    const auto w = parse_windows("10:35,45:65,70:85");
    REQUIRE(w.size() == 3);
    CHECK(w[1].lo == 45.0);
    CHECK(w[2].hi == 85.0);
    const auto d = default_windows();
    REQUIRE(d.size() == 3);
    CHECK(d[0].lo == 10.0);
    CHECK(d[0].hi == 35.0);
    CHECK(d[1].lo == 45.0);
    CHECK(d[2].hi == 85.0);
    CHECK_THROWS_AS((void)parse_windows("10-35"), ParseError);
    CHECK_THROWS_AS((void)parse_windows("40:20"), ParseError);
    CHECK_THROWS_AS((void)parse_windows("0:120"), ParseError);
    CHECK_THROWS_AS((void)parse_windows("a:b"), ParseError);
    const auto steps = window_steps({10, 35}, 101);
    CHECK(steps.front() == 10);
    CHECK(steps.back() == 35);
    CHECK(steps.size() == 26);
}

TEST_CASE("evidence log-odds") {
    const std::vector<double> gamma{0.4, -0.3};
    Matrix x(2, 21, 0.4);
    const auto rows = evidence_analysis(x, default_windows(), gamma, Link::logistic);
    CHECK(rows.size() == 3 * 2 * 2);
    for (const auto& r : rows)
        if (r.level == 0) {
            CHECK(r.p == 0.5);
            CHECK(r.r == 0.0);
        }

    Matrix big(1, 11, 1e6);
    const auto capped = evidence_analysis(big, default_windows(), std::vector<double>{0.0}, Link::logistic);
    for (const auto& r : capped) {
        CHECK(r.p >= 0.0);
        CHECK(r.r == -709.0);
    }
    // antisymmetry: reflecting x around gamma maps p to 1 - p
    Matrix up(1, 11, 0.0), down(1, 11, 0.0);
    for (std::size_t n = 0; n < 11; ++n) {
        up(0, n) = 0.1 * static_cast<double>(n);
        down(0, n) = -0.1 * static_cast<double>(n);
    }
    const auto ru = evidence_analysis(up, default_windows(), std::vector<double>{0.0}, Link::logistic);
    const auto rd = evidence_analysis(down, default_windows(), std::vector<double>{0.0}, Link::logistic);
    for (std::size_t k = 0; k < ru.size(); ++k) {
        CHECK(ru[k].p + rd[k].p == doctest::Approx(1.0));
        CHECK(ru[k].r == doctest::Approx(-rd[k].r));
    }
    CHECK_THROWS_AS((void)evidence_analysis(x, default_windows(), gamma, Link::gompertz), UnsupportedError);
}

TEST_CASE("posterior-predictive evaluation") {
    const double gamma_true[] = {0.2, -0.3};
    const auto ds = testing::simulated_dataset(3, 6, 41, {2}, gamma_true, 6);
    RunOptions o;
    o.niter = 1500;
    o.nwarmup = 500;
    o.nchains = 2;
    o.threads = 1;
    o.max_state_draws = 100;
    const auto fit = run_ssm(ds, std::vector<PriorSpec>(2, parse_prior("normal(0,1)")), {}, o);
    const auto ev = evaluate_ssm(fit.draws, ds, {}, 40, 3, 1);
    CHECK(ev.pa_overall.size() == 40);
    CHECK(ev.pa_subject.rows() == 40);
    CHECK(ev.pa_subject.cols() == 3);
    CHECK(ev.dtw.rows() == 40);
    CHECK(ev.dtw.cols() == 18);
    CHECK(ev.mean_pa_subject_by_subject.size() == 3);
    CHECK(ev.mean_pa_overall > 0.8);
    CHECK(ev.mean_pa_overall <= 1.0);
    for (double v : ev.dtw.data()) CHECK(v >= 0.0);
    const auto ev4 = evaluate_ssm(fit.draws, ds, {}, 40, 3, 4);
    CHECK(ev4.pa_overall == ev.pa_overall);
    CHECK(ev4.dtw == ev.dtw);
    CHECK(ev4.mean_dtw == ev.mean_dtw);
    CHECK_THROWS_AS((void)evaluate_ssm(fit.draws, ds, {}, 0, 3, 1), ValidationError);

    testing::TempDir dir("eval");
    write_evaluation(dir.path(), ev, ds);
    const std::string json = testing::slurp(dir / "evaluation.json");
    CHECK(json.find("\"PA_ov\"") != std::string::npos);
    CHECK(json.find("\"per_subject\"") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "DTW.csv"));
}

TEST_CASE("noise-free refit reconstructs the data") {
    // With kappa pinned near the upper limit Y is essentially the location, so
    // replicated data sit on top of the observed data.
    ModelConfig cfg;
    cfg.kappa_bounds = {1e6, 1e6 + 1};
    const double gamma_true[] = {0.5};
    const auto ds = testing::simulated_dataset(2, 3, 30, {1}, gamma_true, 9, cfg);
    RunOptions o;
    o.niter = 1200;
    o.nwarmup = 400;
    o.nchains = 1;
    o.threads = 1;
    o.max_state_draws = 50;
    const auto fit = run_ssm(ds, std::vector<PriorSpec>(1, parse_prior("normal(0,1)")), cfg, o);
    const auto ev = evaluate_ssm(fit.draws, ds, cfg, 20, 1, 1);
    CHECK(ev.mean_pa_overall > 0.99);
}
