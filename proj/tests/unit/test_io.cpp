#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "latdisc/error.hpp"
#include "latdisc/io.hpp"

using namespace latdisc;

TEST_CASE("numbers print with 17 significant digits and round-trip") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(13) == "13");
    CHECK(format_number(INFINITY) == "inf");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(format_number(NAN) == "nan");
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng) * std::pow(10.0, i % 20 - 10);
        CHECK(std::stod(format_number(x)) == x);
    }
}

TEST_CASE("config parsing and canonical round-trip") {
    const std::string text =
        "# experiment\n"
        "body = ball:d=2,r=1\n"
        "threads=2\n"
        "\n"
        "[sweep]\n"
        "R = 2^4..2^9   # grid\n"
        "window = short\n"
        "[count]\n"
        "t = 2\n";
    const auto c = Config::parse(text);
    CHECK(c.get_string("sweep", "body", "") == "ball:d=2,r=1");
    CHECK(c.get_string("sweep", "R", "") == "2^4..2^9");
    CHECK(c.get_double("count", "t", 0) == 2.0);
    CHECK(c.get_int("sweep", "threads", 0) == 2);
    CHECK(!c.find("count", "window").has_value());
    CHECK(Config::parse(c.to_text()) == c);
    CHECK(Config::parse(c.to_text()).to_text() == c.to_text());

    auto d = c;
    d.set_assignment("count.t=3.5");
    CHECK(d.get_double("count", "t", 0) == 3.5);
    d.set("sweep.window", "fixed:2");
    CHECK(Config::parse(d.to_text()) == d);
    CHECK_THROWS_AS(d.set_assignment("novalue"), PreconditionError);
}

TEST_CASE("config diagnostics name the line and field") {
    auto msg = [](const std::string& text) {
        try {
            Config::parse(text);
        } catch (const PreconditionError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(msg("a = 1\nthis line is wrong\n").find("line 2") != std::string::npos);
    CHECK(msg("a = 1\n[broken\n").find("line 2") != std::string::npos);
    CHECK(msg("a = 1\na = 2\n").find("line 2") != std::string::npos);
    CHECK(msg("= 3\n").find("line 1") != std::string::npos);

    const auto c = Config::parse("t = abc\nflag = maybe\n");
    try {
        c.require_double("count", "t");
        FAIL("expected an error");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("'t'") != std::string::npos);
    }
    CHECK_THROWS_AS(c.get_bool("x", "flag", false), PreconditionError);
    CHECK_THROWS_AS(c.require_string("x", "missing"), PreconditionError);
    CHECK_THROWS_AS(Config::load("/nonexistent/config.ini"), PreconditionError);
}

TEST_CASE("grids") {
    CHECK(parse_grid("1, 2 3", "g") == std::vector<double>{1, 2, 3});
    CHECK(parse_grid("2^4..2^7", "g") == std::vector<double>{16, 32, 64, 128});
    CHECK(parse_grid("0..1:5", "g") == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    const auto g = parse_grid("log:1..1000:4", "g");
    REQUIRE(g.size() == 4);
    CHECK(g[0] == 1.0);
    CHECK(g[1] == doctest::Approx(10));
    CHECK(g[3] == 1000.0);
    CHECK_THROWS_AS(parse_grid("", "g"), PreconditionError);
    CHECK_THROWS_AS(parse_grid("1,x", "g"), PreconditionError);
    CHECK_THROWS_AS(parse_grid("log:0..10:3", "g"), PreconditionError);
    CHECK_THROWS_AS(parse_double("1.5e", "f"), PreconditionError);
}

TEST_CASE("csv tables") {
    CsvTable t;
    t.metadata = {{"tool", "latdisc"}, {"body", "ball:d=2,r=1"}};
    t.columns = {"R", "G"};
    t.add_row({16, 0.1});
    t.add_row({32, INFINITY});
    CHECK(to_csv(t) == "# tool: latdisc\n# body: ball:d=2,r=1\nR,G\n16,0.10000000000000001\n32,inf\n");
    CHECK_THROWS_AS(t.add_row({1.0}), PreconditionError);
}

TEST_CASE("write_text creates directories") {
    const auto dir = std::filesystem::temp_directory_path() / "latdisc_io_test" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    write_text(dir / "a.txt", "hello\n");
    std::ifstream in(dir / "a.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "hello\n");
    std::filesystem::remove_all(dir.parent_path());
}

TEST_CASE("svg plots are deterministic and reject empty input") {
    PlotSeries s{"G", {16, 32, 64, 128}, {0.1, 0.04, 0.012, 0.0045}};
    const auto a = loglog_svg("sweep", {s}, PlotLine{-1.5, 1.8});
    const auto b = loglog_svg("sweep", {s}, PlotLine{-1.5, 1.8});
    CHECK(a == b);
    CHECK(a.rfind("<svg", 0) == 0);
    CHECK(a.find("</svg>") != std::string::npos);
    CHECK(a != loglog_svg("sweep", {s}));
    CHECK_THROWS_AS(loglog_svg("x", {}), PreconditionError);
    CHECK_THROWS_AS(loglog_svg("x", {PlotSeries{"e", {}, {}}}), PreconditionError);
    CHECK_THROWS_AS(loglog_svg("x", {PlotSeries{"n", {1, 2}, {1, -1}}}), PreconditionError);
}
