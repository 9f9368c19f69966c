#include <cmath>
#include <limits>

#include "doctest.h"
#include "test_support.hpp"

#include "mtrack/diagnostics.hpp"
#include "mtrack/error.hpp"

using namespace mtrack;

namespace {

std::vector<double> iid_normal(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = z(rng);
    return v;
}

std::vector<double> ar1(std::size_t n, double rho, std::uint64_t seed) {
    Rng rng = make_rng(seed, 1);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(n);
    double x = z(rng) / std::sqrt(1 - rho * rho);
    for (auto& e : v) {
        x = rho * x + z(rng);
        e = x;
    }
    return v;
}

}  // namespace

TEST_CASE("split Rhat reduces to sqrt((n-1)/n) when every half shares its mean") {
    // Each chain repeats its first half, and both chains are identical, so B = 0.
    const auto half = iid_normal(500, 3);
    std::vector<double> chain(half);
    chain.insert(chain.end(), half.begin(), half.end());
    const std::vector<std::vector<double>> chains{chain, chain};
    const double n = static_cast<double>(half.size());
    CHECK(std::abs(split_rhat(chains) - std::sqrt((n - 1.0) / n)) < 1e-12);
}

TEST_CASE("split Rhat flags disjoint chains and accepts iid draws") {
    auto a = iid_normal(1000, 1);
    auto b = iid_normal(1000, 2);
    for (auto& v : a) v *= 1e-3;
    for (auto& v : b) v = 10.0 + 1e-3 * v;
    const std::vector<std::vector<double>> disjoint{a, b};
    CHECK(split_rhat(disjoint) > 1.1);

    const std::vector<std::vector<double>> iid{iid_normal(10000, 5)};
    const double r = split_rhat(iid);
    CHECK(r >= 0.999);
    CHECK(r <= 1.01);

    const std::vector<std::vector<double>> constant{std::vector<double>(100, 2.0), std::vector<double>(100, 2.0)};
    CHECK(split_rhat(constant) == std::numeric_limits<double>::infinity());
    const std::vector<std::vector<double>> tiny{{1.0, 2.0, 3.0}};
    CHECK_THROWS_AS((void)split_rhat(tiny), ValidationError);
    const std::vector<std::vector<double>> unequal{std::vector<double>(10, 1.0), std::vector<double>(12, 1.0)};
    CHECK_THROWS_AS((void)split_rhat(unequal), ValidationError);
}

TEST_CASE("effective sample size") {
    const std::vector<std::vector<double>> iid{iid_normal(5000, 7), iid_normal(5000, 8)};
    const double ess = effective_n(iid);
    CHECK(ess == doctest::Approx(10000.0).epsilon(0.10));
    CHECK(ess <= 10000.0);

    const std::vector<std::vector<double>> constant{std::vector<double>(100, 1.0)};
    CHECK(effective_n(constant) == 0.0);

    const double rho = 0.9;
    const std::size_t n = 50000;
    const std::vector<std::vector<double>> chains{ar1(n, rho, 1), ar1(n, rho, 2), ar1(n, rho, 3), ar1(n, rho, 4)};
    const double ratio = effective_n(chains) / (4.0 * n);
    CHECK(ratio == doctest::Approx((1 - rho) / (1 + rho)).epsilon(0.30));

    // antithetic draws would exceed m*n; the estimate is capped
    std::vector<double> alt(2000);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2 ? 1.0 : -1.0) + 1e-3 * std::sin(static_cast<double>(i));
    const std::vector<std::vector<double>> neg{alt};
    CHECK(effective_n(neg) <= 2000.0);
}

TEST_CASE("quantiles and summary") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
    CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(quantile({1, 2, 3, 4, 5}, 0.25) == 2.0);
    const std::vector<std::vector<double>> chains{iid_normal(4000, 1), iid_normal(4000, 2)};
    const auto s = summarize("gamma[1]", chains);
    CHECK(s.name == "gamma[1]");
    CHECK(std::abs(s.mean) < 0.05);
    CHECK(s.sd == doctest::Approx(1.0).epsilon(0.05));
    for (std::size_t q = 1; q < s.quantiles.size(); ++q) CHECK(s.quantiles[q] >= s.quantiles[q - 1]);
    CHECK(s.quantiles[2] == doctest::Approx(0.0).epsilon(0.05).scale(1.0));
    CHECK(s.n_eff <= 8000.0);
    CHECK(s.se_mean == doctest::Approx(s.sd / std::sqrt(s.n_eff)));
    CHECK(s.rhat >= std::sqrt(1999.0 / 2000.0) - 1e-12);
}
