#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

#include "mtrack/error.hpp"
#include "mtrack/simulate.hpp"

using namespace mtrack;

namespace {

DesignSpec spec_of(std::size_t I, std::size_t J, std::size_t N, std::vector<std::size_t> K, std::string formula = {}) {
    DesignSpec s;
    s.I = I;
    s.J = J;
    s.N = N;
    s.K = std::move(K);
    s.formula = std::move(formula);
    return s;
}

}  // namespace

TEST_CASE("designs") {
    Rng rng = make_rng(1, 0);
    const auto d = generate_design(spec_of(2, 6, 61, {2}), rng);
    REQUIRE(d.table.size() == 12);
    for (int s = 1; s <= 2; ++s) {
        int level1 = 0;
        for (const auto& r : d.table)
            if (r.sbj == s && r.levels[0] == 1) ++level1;
        CHECK(level1 == 3);
    }
    CHECK(d.table[7].sbj == 2);
    CHECK(d.table[7].trial == 2);

    const auto one = generate_design(spec_of(1, 1, 5, {1}), rng);
    CHECK(one.table.size() == 1);
    REQUIRE(one.z.design.Z.rows() == 1);
    REQUIRE(one.z.design.Z.cols() == 1);
    CHECK(one.z.design.Z(0, 0) == 1.0);

    const auto two = generate_design(spec_of(2, 8, 5, {2, 4}, "~Z1*Z2"), rng);
    CHECK(two.z.design.Z.cols() == 8);

    CHECK_THROWS_AS((void)generate_design(spec_of(2, 7, 5, {2}), rng), ValidationError);
    auto rnd = spec_of(2, 7, 5, {2});
    rnd.methods = {AssignMethod::random};
    CHECK_NOTHROW((void)generate_design(rnd, rng));
}

TEST_CASE("replicate shapes and ranges") {
    Rng rng = make_rng(2, 0);
    const auto d = generate_design(spec_of(3, 4, 40, {2}), rng);
    Rng r = make_rng(2, 1);
    const auto rep = simulate_replicate(d, std::vector<double>{0.0, 0.5}, {}, r);
    CHECK(rep.X.rows() == 40);
    CHECK(rep.X.cols() == 3);
    CHECK(rep.Y.rows() == 40);
    CHECK(rep.Y.cols() == 12);
    CHECK(rep.beta.size() == 4);
    for (std::size_t i = 0; i < 3; ++i) CHECK(rep.X(0, i) == kAngleFloor);
    for (std::size_t n = 0; n < 40; ++n)
        for (std::size_t c = 0; c < 12; ++c) {
            CHECK(rep.Y(n, c) > 0.0);
            CHECK(rep.Y(n, c) <= kPi);
            CHECK(rep.D(n, c) >= kPi / 4);
            CHECK(rep.D(n, c) <= 3 * kPi / 4);
            CHECK(rep.D(n, c) == compute_d(clamp_to_arc(rep.MU(n, c))));
        }
}

TEST_CASE("first step sits on the boundary") {
    Rng rng = make_rng(3, 0);
    const auto d = generate_design(spec_of(2, 6, 10, {2}), rng);
    Rng r = make_rng(3, 1);
    const auto rep = simulate_replicate(d, std::vector<double>{0.0, 0.0}, {}, r);
    for (std::size_t c = 0; c < 12; ++c) {
        CHECK(rep.MU(0, c) == doctest::Approx(kPi / 2).epsilon(1e-4));
        CHECK(rep.D(0, c) == doctest::Approx(0.785).epsilon(1e-3));
    }
}

TEST_CASE("concentration limit") {
    ModelConfig cfg;
    cfg.kappa_bounds = {1e7, 1e7 + 1};
    Rng rng = make_rng(4, 0);
    const auto d = generate_design(spec_of(2, 2, 30, {1}), rng);
    Rng r = make_rng(4, 1);
    const auto rep = simulate_replicate(d, std::vector<double>{0.3}, cfg, r);
    for (std::size_t n = 0; n < 30; ++n)
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(rep.Y(n, c) == doctest::Approx(clamp_to_arc(rep.MU(n, c))).epsilon(1e-2).scale(1.0));
}

TEST_CASE("vanishing innovation gives one shared trajectory") {
    ModelConfig cfg;
    cfg.sigma_x = 1e-300;
    Rng rng = make_rng(5, 0);
    const auto d = generate_design(spec_of(4, 3, 20, {3}), rng);
    Rng r = make_rng(5, 1);
    const auto rep = simulate_replicate(d, std::vector<double>{0.1, 0.4, -0.2}, cfg, r);
    for (std::size_t n = 0; n < 20; ++n)
        for (std::size_t i = 1; i < 4; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(rep.MU(n, i * 3 + j) == rep.MU(n, j));
}

TEST_CASE("generate_data draws gamma from the prior") {
    const std::vector<PriorSpec> priors{parse_prior("normal(2.7,1)"), parse_prior("normal(-1,0.5)")};
    const std::size_t M = 10000;
    const auto sim = generate_data(spec_of(1, 2, 2, {2}), priors, {}, M, 31);
    REQUIRE(sim.replicates.size() == M);
    double s0 = 0.0, s1 = 0.0;
    for (const auto& r : sim.replicates) {
        s0 += r.gamma[0];
        s1 += r.gamma[1];
    }
    CHECK(std::abs(s0 / M - 2.7) < 3.0 * 1.0 / std::sqrt(double(M)));
    CHECK(std::abs(s1 / M + 1.0) < 3.0 * 0.5 / std::sqrt(double(M)));

    CHECK_THROWS_AS((void)generate_data(spec_of(1, 2, 2, {2}), std::vector<PriorSpec>(3, default_prior()), {}, 1, 1),
                    ValidationError);

    ModelConfig gomp;
    gomp.link = Link::gompertz;
    const auto g = generate_data(spec_of(2, 4, 10, {2}), std::vector<PriorSpec>(2, parse_prior("normal(0,1)")), gomp, 50, 3);
    for (const auto& r : g.replicates)
        for (double b : r.beta) CHECK(b >= 0.0);

    const auto a = generate_data(spec_of(2, 4, 10, {2}), priors, {}, 3, 9);
    const auto b = generate_data(spec_of(2, 4, 10, {2}), priors, {}, 3, 9);
    for (std::size_t m = 0; m < 3; ++m) {
        CHECK(a.replicates[m].Y == b.replicates[m].Y);
        CHECK(a.replicates[m].X == b.replicates[m].X);
    }
    const auto ds = a.dataset(1);
    CHECK(ds.Y == a.replicates[1].Y);
    CHECK(ds.K() == 2);
    CHECK_NOTHROW(ds.validate());
}

TEST_CASE("simulation directory round trip") {
    testing::TempDir dir("sim");
    const std::vector<PriorSpec> priors(2, parse_prior("normal(0,1)"));
    const auto sim = generate_data(spec_of(2, 4, 12, {2}), priors, {}, 3, 4);
    write_simulation(dir.path(), sim);
    for (const char* f : {"params.csv", "design.csv", "Z.csv", "meta.json", "Y_1.csv", "X_3.csv", "D_2.csv", "MU_1.csv"})
        CHECK(std::filesystem::exists(dir / f));
    const auto ds = read_simulated_dataset(dir.path(), 2);
    CHECK(ds.Y == sim.replicates[1].Y);
    CHECK(ds.D == sim.replicates[1].D);
    CHECK(ds.Z.Z == sim.design.z.design.Z);
    CHECK_THROWS_AS((void)read_simulated_dataset(dir.path(), 4), ValidationError);
    CHECK_THROWS_AS((void)read_simulated_dataset(dir.path(), 0), ValidationError);
    const std::string params = testing::slurp(dir / "params.csv");
    CHECK(params.rfind("m,gamma_1,gamma_2,clamped\n1,", 0) == 0);
}
