#include <doctest.h>

#include <cmath>
#include <random>

#include "latdisc/discrepancy.hpp"
#include "latdisc/error.hpp"
#include "oracles.hpp"

using namespace latdisc;

namespace {

// Oracle N(t) from a brute-force event list.
struct StepN {
    std::uint64_t base;
    std::vector<std::pair<double, std::uint64_t>> ev;
    double operator()(double t) const {
        double n = double(base);
        for (const auto& [r, m] : ev) {
            if (r <= t) n += double(m);
        }
        return n;
    }
    std::vector<double> cuts() const {
        std::vector<double> c;
        for (const auto& e : ev) c.push_back(e.first);
        return c;
    }
};

double quadrature_G(const oracle::Shape& s, double R, double h, bool relative) {
    const StepN N{oracle::brute_count(s, R) - 0, oracle::brute_events(s, R, R + h)};
    // brute_count(R) counts rho <= R, exactly the base of the half-open window
    const double V = oracle::volume(s);
    const int d = s.dim();
    auto f = [&](double t) {
        const double main = V * std::pow(t, d);
        const double e = N(t) - main;
        return relative ? (e / main) * (e / main) : e * e;
    };
    const double scale = relative ? 1e-14 : 1e-10;
    return std::sqrt(oracle::piecewise(f, N.cuts(), R, R + h, scale) / h);
}

}  // namespace

TEST_CASE("lattice rest examples") {
    CHECK(lattice_rest(Body::ball(2, 1.0), 2.0) == doctest::Approx(13 - 4 * oracle::kPi).epsilon(1e-14));
    CHECK(lattice_rest(Body::ball(2, 1.0), 2.0) == doctest::Approx(0.433629).epsilon(1e-6));
    CHECK(lattice_rest(Body::ball(3, 1.0), 1.0) == doctest::Approx(7 - 4 * oracle::kPi / 3).epsilon(1e-14));
    for (double t : {0.1, 0.5, 0.9}) {
        const double e = lattice_rest(Body::ball(2, 1.0), t);
        CHECK(e == doctest::Approx(1 - oracle::kPi * t * t));
    }
}

TEST_CASE("window msd matches the two-piece closed form on [1, 2]") {
    // N = 5 on [1, sqrt 2), N = 9 on [sqrt 2, 2): integrate (N - pi t^2)^2 symbolically
    auto F = [](long double N, long double t) {
        const long double pi = 3.141592653589793238462643383279502884L;
        return N * N * t - 2 * N * pi * t * t * t / 3 + pi * pi * t * t * t * t * t / 5;
    };
    const long double r2 = std::sqrt(2.0L);
    const long double I = (F(5, r2) - F(5, 1)) + (F(9, 2) - F(9, r2));
    const double exact = double(std::sqrt(I));
    const auto w = window_msd(Body::ball(2, 1.0), 1.0, 1.0, false);
    CHECK(std::abs(w.G - exact) < 1e-10);
    CHECK(std::abs(w.G - 1.53830) < 1e-4);
    // the jump at sqrt 2 is the only event inside
    CHECK(w.events_used == 1);
}

TEST_CASE("window without events is a single polynomial piece") {
    // (1, sqrt 2) contains no gauge values of the disk
    const double a = 1.05, b = 1.35;
    const auto w = window_msd(Body::ball(2, 1.0), a, b - a, false);
    auto F = [](double t) {
        const double pi = oracle::kPi;
        return 25 * t - 10 * pi * t * t * t / 3 + pi * pi * std::pow(t, 5) / 5;
    };
    CHECK(w.events_used == 0);
    CHECK(w.G == doctest::Approx(std::sqrt((F(b) - F(a)) / (b - a))).epsilon(1e-12));
}

TEST_CASE("window msd agrees with adaptive quadrature") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> uR(1.0, 25.0), uh(0.05, 3.0);
    const std::vector<std::pair<Body, oracle::Shape>> pairs = {
        {Body::ball(2, 1.0), oracle::ball(2, 1.0)},
        {Body::ellipsoid({2.0, 1.0}), oracle::ellipsoid({2.0, 1.0})},
        {Body::superellipse(4, 1, 1), oracle::superellipse(4, 1, 1)},
        {Body::ball(3, 1.0), oracle::ball(3, 1.0)}};
    for (int i = 0; i < 20; ++i) {
        const auto& [b, s] = pairs[i % pairs.size()];
        const double R = b.dim() == 3 ? uR(rng) / 3 : uR(rng);
        const double h = uh(rng);
        for (bool relative : {false, true}) {
            const double ref = quadrature_G(s, R, h, relative);
            const double got = window_msd(b, R, h, relative).G;
            CHECK_MESSAGE(std::abs(got - ref) <= 1e-6 * ref, b.descriptor(), " R=", R, " h=", h, " rel=", relative);
        }
    }
}

TEST_CASE("relative and absolute forms bracket each other") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uR(2.0, 200.0), uh(0.5, 20.0);
    for (const auto& b : {Body::ball(2, 1.0), Body::superellipse(4, 1, 1), Body::ball(3, 1.0)}) {
        for (int i = 0; i < 10; ++i) {
            const double R = uR(rng) / b.dim(), h = uh(rng);
            const double ga = window_msd(b, R, h, false).G;
            const double gr = window_msd(b, R, h, true).G;
            const double V = b.volume();
            CHECK(gr >= ga / (std::pow(R + h, b.dim()) * V) * (1 - 1e-12));
            CHECK(gr <= ga / (std::pow(R, b.dim()) * V) * (1 + 1e-12));
        }
    }
}

TEST_CASE("half-open windows exclude an event at the right end") {
    // window [1, 2) does not see the jump at 2, window [1, 2.0001) does
    const auto a = window_msd(Body::ball(2, 1.0), 1.0, 1.0, false);
    const auto b = window_msd(Body::ball(2, 1.0), 1.0, 1.0001, false);
    CHECK(a.events_used == 1);
    CHECK(b.events_used == 2);
}

TEST_CASE("recomputation is bit-identical and independent of threads") {
    EnumerationOptions four;
    four.threads = 4;
    for (const auto& b : {Body::ball(2, 1.0), Body::superellipse(4, 1, 1), Body::ball(3, 1.0)}) {
        const auto x = window_msd(b, 30.0, 5.0, true);
        const auto y = window_msd(b, 30.0, 5.0, true);
        const auto z = window_msd(b, 30.0, 5.0, true, four);
        CHECK(x.G == y.G);
        CHECK(x.G == z.G);
        // from a wider event list covering the same window
        const auto ev = gauge_events(b, 30.0, 40.0);
        const auto w = window_msd_from_events(ev, b.dim(), b.volume(), 30.0, 5.0, true);
        CHECK(w.G == x.G);
    }
}

TEST_CASE("window preconditions") {
    CHECK_THROWS_AS(window_msd(Body::ball(2, 1.0), -1.0, 1.0, false), PreconditionError);
    CHECK_THROWS_AS(window_msd(Body::ball(2, 1.0), 1.0, 0.0, false), PreconditionError);
}

TEST_CASE("window rules") {
    CHECK(parse_window_rule("full").length(100.0) == 100.0);
    CHECK(parse_window_rule("short").length(100.0) == std::ceil(std::log(100.0)));
    CHECK(parse_window_rule("fixed:2.5").length(100.0) == 2.5);
    CHECK(to_string(parse_window_rule("fixed:2.5")) == "fixed:2.5");
    CHECK_THROWS_AS(parse_window_rule("weekly"), PreconditionError);
    CHECK_THROWS_AS(parse_window_rule("fixed:-1"), PreconditionError);
}

TEST_CASE("fits on synthetic tables") {
    SweepTable t;
    t.dim = 2;
    for (double R : {16.0, 32.0, 64.0, 128.0}) t.rows.push_back({R, R, 0.25, 0.0, 0});
    const auto flat = fit_table(t, WindowRule{});
    CHECK(std::abs(flat.fit.slope) < 1e-12);

    for (int d : {2, 3, 4}) {
        SweepTable u;
        u.dim = d;
        for (double R : {8.0, 16.0, 32.0, 64.0}) u.rows.push_back({R, R, bound_d(d, R), 0.0, 0});
        CHECK(normalized_stat(u) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(normalized_stat(u, d) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SweepTable empty;
    CHECK_THROWS_AS(normalized_stat(empty), PreconditionError);
    CHECK_THROWS_AS(sweep_and_fit(Body::ball(2, 1.0), {4, 8, 16}, WindowRule{}), PreconditionError);
    CHECK_THROWS_AS(sweep_and_fit(Body::ball(2, 1.0), {4, 8, 8, 16}, WindowRule{}), PreconditionError);
}

TEST_CASE("disk sweep scales like R^-3/2") {
    std::vector<double> grid;
    for (int j = 4; j <= 11; ++j) grid.push_back(std::ldexp(1.0, j));
    const auto res = sweep_and_fit(Body::ball(2, 1.0), grid, WindowRule{});
    CHECK(res.fit.slope >= -1.65);
    CHECK(res.fit.slope <= -1.35);
    CHECK(res.fit.ci_low <= res.fit.slope);
    CHECK(res.fit.ci_high >= res.fit.slope);
    CHECK(!res.unstable);
    REQUIRE(res.table.rows.size() == 8);
    for (std::size_t i = 1; i < res.table.rows.size(); ++i) CHECK(res.table.rows[i].R > res.table.rows[i - 1].R);
    // truncating the grid at 2^9 changes the sup statistic by less than a factor 2
    SweepTable head = res.table;
    head.rows.resize(6);
    const double full = normalized_stat(res.table), part = normalized_stat(head);
    CHECK(std::isfinite(full));
    CHECK(full <= 2 * part);
    CHECK(part <= 2 * full);
}

TEST_CASE("three-dimensional sweep after removing the log factor") {
    std::vector<double> grid;
    for (int j = 3; j <= 8; ++j) grid.push_back(std::ldexp(1.0, j));
    const auto res = sweep_and_fit(Body::ball(3, 1.0), grid, WindowRule{});
    REQUIRE(res.deflated_fit.has_value());
    CHECK(res.deflated_fit->slope >= -2.3);
    CHECK(res.deflated_fit->slope <= -1.7);
}

TEST_CASE("four-dimensional normalized statistic stays bounded") {
    const auto res = sweep_and_fit(Body::ball(4, 1.0), {4, 8, 16, 32}, WindowRule{});
    const auto& rows = res.table.rows;
    CHECK(std::isfinite(normalized_stat(res.table)));
    const auto n = rows.size();
    const bool increasing = rows[n - 3].normalized < rows[n - 2].normalized && rows[n - 2].normalized < rows[n - 1].normalized;
    CHECK(!increasing);
}

TEST_CASE("polar pair sweeps are finite and grid-stable") {
    const auto b = Body::superellipse(4, 1, 1);
    std::vector<double> grid{16, 32, 64, 128, 256};
    for (const auto& body : {b, polar(b)}) {
        const auto res = sweep_and_fit(body, grid, WindowRule{});
        SweepTable head = res.table;
        head.rows.resize(4);
        const double full = normalized_stat(res.table), part = normalized_stat(head);
        CHECK(std::isfinite(full));
        CHECK(full <= 2 * part);
    }
}
