#include <sstream>

#include "doctest.h"
#include "test_support.hpp"

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"

using namespace mtrack;

TEST_CASE("number formatting round-trips") {
    CHECK(csv::format_double(0.0) == "0");
    CHECK(csv::format_double(-0.0) == "0");
    CHECK(csv::format_double(1.5) == "1.5");
    CHECK(csv::format_double(1e-4) == "1e-04");
    Rng rng = make_rng(3, 3);
    std::normal_distribution<double> z(0.0, 1e3);
    for (int i = 0; i < 2000; ++i) {
        const double v = z(rng) * std::pow(10.0, static_cast<double>(i % 17) - 8.0);
        CHECK(csv::parse_double(csv::format_double(v)) == v);
    }
}

TEST_CASE("parsing rejects garbage") {
    CHECK(csv::parse_double(" 2.5 ") == 2.5);
    CHECK(csv::parse_double("-1e-3") == -1e-3);
    CHECK_THROWS_AS((void)csv::parse_double("1.2.3"), ValidationError);
    CHECK_THROWS_AS((void)csv::parse_double(""), ValidationError);
    CHECK_THROWS_AS((void)csv::parse_double("abc"), ValidationError);
    CHECK(csv::parse_int("42") == 42);
    CHECK_THROWS_AS((void)csv::parse_int("4.2"), ValidationError);
}

TEST_CASE("quoted fields") {
    const auto f = csv::split_line(R"(a,"b,c","d ""q""",)");
    REQUIRE(f.size() == 4);
    CHECK(f[0] == "a");
    CHECK(f[1] == "b,c");
    CHECK(f[2] == "d \"q\"");
    CHECK(f[3].empty());
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("tables") {
    std::istringstream in("\xEF\xBB\xBFx,y\r\n1,2\n\n3,4\n");
    const auto t = csv::read_table(in);
    CHECK(t.header == std::vector<std::string>{"x", "y"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][0] == "3");
    std::istringstream ragged("x,y\n1,2\n3\n");
    CHECK_THROWS_WITH_AS((void)csv::read_table(ragged), doctest::Contains("line 3"), ValidationError);
}

TEST_CASE("matrix round trip") {
    testing::TempDir dir("csv");
    Matrix m(3, 2);
    m(0, 0) = 1.0 / 3.0;
    m(1, 1) = -2.5e-12;
    m(2, 0) = 7.0;
    const std::vector<std::string> header{"a", "b"};
    csv::write_matrix(dir / "m.csv", m, header);
    std::vector<std::string> h;
    const Matrix back = csv::read_matrix(dir / "m.csv", &h);
    CHECK(h == header);
    CHECK(back == m);
    CHECK(testing::slurp(dir / "m.csv") == "a,b\n0.3333333333333333,0\n0,-2.5e-12\n7,0\n");
}
