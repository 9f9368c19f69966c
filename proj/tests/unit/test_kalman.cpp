#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "test_support.hpp"

#include "mtrack/error.hpp"
#include "mtrack/kalman.hpp"

using namespace mtrack;
using testing::manual_dataset;

namespace {

double gaussian_loglik_sum(const ProcessedDataset& d, const FilterResult& fr) {
    double s = 0.0;
    for (std::size_t n = 0; n < d.N; ++n)
        for (std::size_t c = 0; c < d.columns(); ++c) {
            const double r = d.Y(n, c) - fr.y_hat(c, n);
            const double v = fr.sigma(c, n);
            s += -0.5 * std::log(2.0 * kPi * v) - r * r / (2.0 * v);
        }
    return s;
}

}  // namespace

TEST_CASE("single-step hand computation") {
    // Pick the bounds so that kappa(d) = 100 at y = pi/2 + 0.1, with yhat = pi/2.
    const double y = kPi / 2 + 0.1;
    const double f = std::expm1(compute_d(y)) / std::expm1(kPi);
    ModelConfig cfg;
    cfg.kappa_bounds = {50.0, 50.0 + 50.0 / f};
    REQUIRE(concentration(compute_d(y), cfg) == doctest::Approx(100.0).epsilon(1e-13));
    const auto ds = manual_dataset(1, 1, Matrix(1, 1, y));
    const std::vector<double> gamma{0.0};
    const auto fr = kalman_filter(ds, gamma, cfg, FilterVariant::as_printed);
    CHECK(fr.lambda_bar(0, 0) == 1.0);
    CHECK(fr.y_hat(0, 0) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(fr.sigma(0, 0) == doctest::Approx(1.1).epsilon(1e-13));
    CHECK(fr.x_hat(0, 0) == doctest::Approx(0.1 / 1.1).epsilon(1e-12));
    CHECK(fr.x_hat(0, 0) == doctest::Approx(0.09091).epsilon(1e-4));
    CHECK(fr.lambda_hat(0, 0) == doctest::Approx(1.0 + 1.0 / 1.1).epsilon(1e-12));

    const auto tb = kalman_filter(ds, gamma, cfg, FilterVariant::textbook);
    CHECK(tb.lambda_bar(0, 0) == 2.0);
    CHECK(tb.lambda_hat(0, 0) == doctest::Approx(2.0 - 4.0 / 2.1).epsilon(1e-12));
}

TEST_CASE("zero innovation keeps the states at zero") {
    const std::size_t I = 3, J = 4, N = 25;
    Matrix Z(J, 2);
    for (std::size_t j = 0; j < J; ++j) {
        Z(j, 0) = 1.0;
        Z(j, 1) = j % 2 ? 1.0 : 0.0;
    }
    const std::vector<double> gamma{0.4, -0.9};
    Matrix Y(N, I * J);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < I; ++i)
            for (std::size_t j = 0; j < J; ++j) Y(n, i * J + j) = gfun_logistic(0.0, 0.4 - 0.9 * Z(j, 1));
    const auto ds = manual_dataset(I, J, Y, Z);
    for (auto v : {FilterVariant::textbook, FilterVariant::as_printed}) {
        const auto fr = kalman_filter(ds, gamma, {}, v);
        for (double x : fr.x_hat.data()) CHECK(x == 0.0);
        const auto sm = kalman_smoother(fr);
        for (double x : sm.x_smooth.data()) CHECK(x == 0.0);
    }
}

TEST_CASE("gains, positivity and variance ordering") {
    const double gamma_true[] = {0.3, -0.2};
    const auto ds = testing::simulated_dataset(3, 4, 40, {2}, gamma_true, 17);
    const std::vector<double> gamma{0.1, 0.2};
    for (auto v : {FilterVariant::textbook, FilterVariant::as_printed}) {
        const auto fr = kalman_filter(ds, gamma, {}, v);
        CHECK(std::isfinite(fr.loglik));
        for (std::size_t n = 0; n < ds.N; ++n) {
            for (std::size_t i = 0; i < ds.I; ++i) {
                const double lb = fr.lambda_bar(i, n);
                const double lh = fr.lambda_hat(i, n);
                CHECK(lb > 0.0);
                CHECK(lh > 0.0);
                if (v == FilterVariant::textbook) CHECK(lh <= lb);
                else CHECK(lh >= lb);
                for (std::size_t j = 0; j < ds.J; ++j) {
                    const double s = fr.sigma(i * ds.J + j, n);
                    CHECK(s > 0.0);
                    const double gain = lb / s;
                    CHECK(gain > 0.0);
                    CHECK(gain < 1.0);
                }
            }
        }
    }
}

TEST_CASE("loglik equals direct summation over the stored arrays") {
    const double gamma_true[] = {-0.4, 0.6, 0.1};
    const auto ds = testing::simulated_dataset(2, 6, 30, {3}, gamma_true, 8);
    const std::vector<double> gamma{-0.2, 0.5, 0.0};
    for (auto v : {FilterVariant::textbook, FilterVariant::as_printed}) {
        const auto fr = kalman_filter(ds, gamma, {}, v);
        const double direct = gaussian_loglik_sum(ds, fr);
        CHECK(std::abs(fr.loglik - direct) <= 1e-12 * std::abs(direct));
        CHECK(marginal_loglik(ds, gamma, {}, v) == fr.loglik);
    }
    CHECK(marginal_loglik(ds, gamma, {}) == kalman_filter(ds, gamma, {}).loglik);
}

TEST_CASE("single cell at its prediction") {
    // N = 1, y = yhat: the log density is -1/2 log(2 pi sigma).
    const auto ds = manual_dataset(1, 1, Matrix(1, 1, kPi / 2));
    const auto fr = kalman_filter(ds, std::vector<double>{0.0}, {});
    CHECK(fr.loglik == doctest::Approx(-0.5 * std::log(2 * kPi * fr.sigma(0, 0))).epsilon(1e-14));
}

TEST_CASE("larger residuals lower the likelihood") {
    // Near-constant kappa keeps sigma fixed while y moves away from yhat = G(0, 3).
    ModelConfig cfg;
    cfg.kappa_bounds = {100.0, 100.000001};
    const std::vector<double> gamma{3.0};
    double prev = marginal_loglik(manual_dataset(1, 1, Matrix(1, 1, 2.0)), gamma, cfg);
    for (double c : {0.05, 0.2, 0.5}) {
        const double ll = marginal_loglik(manual_dataset(1, 1, Matrix(1, 1, 2.0 + c)), gamma, cfg);
        CHECK(ll < prev);
        prev = ll;
    }
}

TEST_CASE("determinism") {
    const double g[] = {0.2, 0.1};
    const auto ds = testing::simulated_dataset(2, 4, 50, {2}, g, 4);
    const auto a = kalman_filter(ds, std::vector<double>{0.0, 0.3}, {});
    const auto b = kalman_filter(ds, std::vector<double>{0.0, 0.3}, {});
    CHECK(a.x_hat == b.x_hat);
    CHECK(a.lambda_hat == b.lambda_hat);
    CHECK(a.loglik == b.loglik);
}

TEST_CASE("smoother anchors and fixed points") {
    const double g[] = {0.2, 0.1};
    const auto ds = testing::simulated_dataset(2, 4, 30, {2}, g, 6);
    const auto fr = kalman_filter(ds, std::vector<double>{0.2, 0.1}, {});
    const auto sm = kalman_smoother(fr);
    for (std::size_t i = 0; i < ds.I; ++i) {
        CHECK(sm.x_smooth(i, ds.N - 1) == fr.x_hat(i, ds.N - 1));
        CHECK(sm.lambda_smooth(i, ds.N - 1) == fr.lambda_hat(i, ds.N - 1));
    }
    auto one = manual_dataset(1, 2, Matrix(1, 2, 1.0));
    const auto f1 = kalman_filter(one, std::vector<double>{0.0}, {});
    const auto s1 = kalman_smoother(f1);
    CHECK(s1.x_smooth == f1.x_hat);
    CHECK(s1.lambda_smooth == f1.lambda_hat);

    // x_bar == x_hat everywhere: the correction vanishes
    FilterResult flat;
    flat.x_hat = Matrix(1, 4, 0.7);
    flat.x_bar = Matrix(1, 4, 0.7);
    flat.lambda_hat = Matrix(1, 4, 0.5);
    flat.lambda_bar = Matrix(1, 4, 1.5);
    CHECK(kalman_smoother(flat).x_smooth == flat.x_hat);
}

TEST_CASE("3-step smoother versus dense Gaussian conditioning") {
    // I = J = 1 textbook filter. Treating z_n = x_bar_n + (y_n - yhat_n) as a
    // linear observation of x_n with variance r_n = 1/sqrt(kappa) reproduces the
    // recursion, so the smoother must equal exact conditioning in that model.
    Matrix Y(3, 1);
    Y(0, 0) = 1.9;
    Y(1, 0) = 2.3;
    Y(2, 0) = 1.2;
    const auto ds = manual_dataset(1, 1, Y);
    ModelConfig cfg;
    cfg.sigma_x = 0.8;
    const std::vector<double> gamma{0.25};
    const auto fr = kalman_filter(ds, gamma, cfg, FilterVariant::textbook);
    const auto sm = kalman_smoother(fr);

    const double q = cfg.sigma_x * cfg.sigma_x;
    Eigen::Vector3d z;
    Eigen::Matrix3d R = Eigen::Matrix3d::Zero();
    for (int n = 0; n < 3; ++n) {
        z(n) = fr.x_bar(0, n) + (Y(n, 0) - fr.y_hat(0, n));
        R(n, n) = fr.sigma(0, n) - fr.lambda_bar(0, n);
    }
    Eigen::Matrix3d P;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) P(a, b) = 1.0 + q * (std::min(a, b) + 1);
    const Eigen::Matrix3d S = P + R;
    const Eigen::Vector3d mean = P * S.ldlt().solve(z);
    const Eigen::Matrix3d cov = P - P * S.ldlt().solve(P);
    for (int n = 0; n < 3; ++n) {
        CHECK(std::abs(sm.x_smooth(0, n) - mean(n)) < 1e-10);
        CHECK(std::abs(sm.lambda_smooth(0, n) - cov(n, n)) < 1e-10);
    }
}

TEST_CASE("loglik is smooth in gamma") {
    const double g[] = {0.1, -0.3, 0.2};
    const auto ds = testing::simulated_dataset(2, 6, 40, {3}, g, 21);
    const StateSpaceModel model(ds, {});
    Rng rng = make_rng(99, 0);
    std::normal_distribution<double> z(0.0, 0.5);
    for (int p = 0; p < 5; ++p) {
        std::vector<double> gamma{z(rng), z(rng), z(rng)};
        for (std::size_t k = 0; k < 3; ++k) {
            auto slope = [&](double h) {
                auto up = gamma;
                auto dn = gamma;
                up[k] += h;
                dn[k] -= h;
                return (model.loglik(up, FilterVariant::textbook) - model.loglik(dn, FilterVariant::textbook)) /
                       (2.0 * h);
            };
            const double s4 = slope(1e-4);
            const double s5 = slope(1e-5);
            INFO("point " << p << ", k " << k << ": " << s4 << " vs " << s5);
            CHECK(std::abs(s4 - s5) <= 5e-3 * std::max(1.0, std::abs(s4)));
        }
    }
}

TEST_CASE("argument checks") {
    const auto ds = manual_dataset(1, 2, Matrix(3, 2, 1.0));
    CHECK_THROWS_AS((void)kalman_filter(ds, std::vector<double>{0.0, 1.0}, {}), ValidationError);
    ModelConfig gomp;
    gomp.link = Link::gompertz;
    CHECK_THROWS_AS((void)kalman_filter(ds, std::vector<double>{-0.5}, gomp), ValidationError);
    CHECK_NOTHROW((void)kalman_filter(ds, std::vector<double>{0.5}, gomp));
    const StateSpaceModel m(ds, gomp);
    CHECK_FALSE(m.admissible(std::vector<double>{-0.5}));
    CHECK(m.admissible(std::vector<double>{0.5}));
    CHECK(parse_variant("as-printed") == FilterVariant::as_printed);
    CHECK(parse_variant("textbook") == FilterVariant::textbook);
    CHECK_THROWS_AS((void)parse_variant("exact"), ValidationError);
}
