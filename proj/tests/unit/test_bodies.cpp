#include <doctest.h>

#include <cmath>
#include <random>

#include "latdisc/body.hpp"
#include "latdisc/error.hpp"
#include "oracles.hpp"

using namespace latdisc;

namespace {

std::vector<Body> planar_family() {
    return {Body::ball(2, 1.0),
            Body::ball(2, 1.7),
            Body::ellipsoid({2.0, 1.0}),
            Body::superellipse(4, 1.0, 1.0),
            Body::superellipse(6, 1.5, 0.8),
            Body::polar_superellipse(4, 1.0, 1.0),
            Body::rotated(Body::superellipse(4, 1.0, 1.0), 0.5535),
            Body::rotated(Body::ellipsoid({2.0, 1.0}), 1.1)};
}

std::vector<Body> all_family() {
    auto v = planar_family();
    v.push_back(Body::ball(3, 1.0));
    v.push_back(Body::ellipsoid({1.5, 1.0, 0.75}));
    v.push_back(Body::ball(4, 1.0));
    return v;
}

Point random_point(std::mt19937_64& rng, int d, double scale = 3.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Point x(d);
    for (auto& v : x) v = u(rng);
    return x;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST_CASE("gauge examples") {
    CHECK(gauge(Body::ball(2, 1.0), Point{3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(gauge(Body::ellipsoid({2.0, 1.0}), Point{2, 0}) == doctest::Approx(1.0).epsilon(1e-15));
    const double g = gauge(Body::superellipse(4, 1, 1), Point{1, 1});
    CHECK(g == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-14));
    CHECK(g == doctest::Approx(1.189207).epsilon(1e-6));
    CHECK(gauge(Body::ball(3, 1.0), Point{0, 0, 0}) == 0.0);
}

TEST_CASE("gauge agrees with independent closed forms") {
    std::mt19937_64 rng(11);
    const std::vector<std::pair<Body, oracle::Shape>> pairs = {
        {Body::ball(2, 1.7), oracle::ball(2, 1.7)},
        {Body::ellipsoid({1.5, 1.0, 0.75}), oracle::ellipsoid({1.5, 1.0, 0.75})},
        {Body::superellipse(6, 1.5, 0.8), oracle::superellipse(6, 1.5, 0.8)},
        {Body::polar_superellipse(4, 1.0, 2.0), oracle::polar_superellipse(4, 1.0, 2.0)},
        {Body::rotated(Body::superellipse(4, 1, 1), 0.7), oracle::superellipse(4, 1, 1, 0.7)}};
    for (const auto& [b, s] : pairs) {
        for (int i = 0; i < 200; ++i) {
            const auto x = random_point(rng, b.dim());
            CHECK(rel(gauge(b, x), oracle::gauge(s, x)) < 1e-12);
        }
    }
}

TEST_CASE("gauge homogeneity, positivity and convexity") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lam(0.01, 50.0);
    for (const auto& b : all_family()) {
        for (int i = 0; i < 200; ++i) {
            auto x = random_point(rng, b.dim());
            auto y = random_point(rng, b.dim());
            const double l = lam(rng);
            Point lx(x);
            for (auto& v : lx) v *= l;
            CHECK(rel(gauge(b, lx), l * gauge(b, x)) < 1e-12);
            CHECK(gauge(b, x) > 0.0);
            CHECK(std::isfinite(gauge(b, x)));
            Point s(x);
            for (int j = 0; j < b.dim(); ++j) s[j] += y[j];
            CHECK(gauge(b, s) <= (gauge(b, x) + gauge(b, y)) * (1 + 1e-12));
        }
    }
}

TEST_CASE("superellipse with m = 2 is the ellipse") {
    std::mt19937_64 rng(2);
    const auto se = Body::superellipse(2, 2.0, 1.0);
    const auto el = Body::ellipsoid({2.0, 1.0});
    for (int i = 0; i < 200; ++i) {
        const auto x = random_point(rng, 2);
        CHECK(rel(gauge(se, x), gauge(el, x)) < 1e-12);
    }
}

TEST_CASE("support examples and rejection of zero") {
    CHECK(support(Body::ellipsoid({2.0, 1.0}), Point{1, 0}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(support(Body::ball(2, 1.0), Point{3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(support(Body::superellipse(4, 1, 1), Point{1, 1}) == doctest::Approx(std::pow(2.0, 0.75)).epsilon(1e-12));
    CHECK_THROWS_AS(support(Body::ball(2, 1.0), Point{0, 0}), PreconditionError);
    CHECK_THROWS_AS(normal_point(Body::ball(2, 1.0), Point{0, 0}), PreconditionError);
}

TEST_CASE("support is the maximum over a dense boundary grid") {
    // dense sampling of the superellipse boundary via the closed-form gauge
    const auto b = Body::superellipse(4, 1, 1);
    const auto s = oracle::superellipse(4, 1, 1);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto xi = random_point(rng, 2);
        double best = -1e300;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double a = 2 * oracle::kPi * i / n;
            std::vector<double> u{std::cos(a), std::sin(a)};
            const double g = oracle::gauge(s, u);
            best = std::max(best, (u[0] * xi[0] + u[1] * xi[1]) / g);
        }
        CHECK(std::abs(support(b, xi) - best) < 1e-8 * std::hypot(xi[0], xi[1]));
    }
}

TEST_CASE("polar closed forms and support identity") {
    CHECK(polar(Body::ball(2, 1.0)).descriptor() == Body::ball(2, 1.0).descriptor());
    CHECK(polar(Body::ball(3, 2.0)).descriptor() == Body::ball(3, 0.5).descriptor());
    CHECK(polar(Body::ellipsoid({2.0, 1.0})).descriptor() == Body::ellipsoid({0.5, 1.0}).descriptor());
    std::mt19937_64 rng(3);
    for (const auto& b : all_family()) {
        const auto p = polar(b);
        const auto pp = polar(p);
        for (int i = 0; i < 100; ++i) {
            const auto xi = random_point(rng, b.dim());
            CHECK(rel(gauge(p, xi), support(b, xi)) < 1e-10);
            CHECK(rel(gauge(pp, xi), gauge(b, xi)) < 1e-10);
        }
    }
}

TEST_CASE("normal point examples") {
    auto np = normal_point(Body::ball(2, 1.0), Point{0, 1});
    CHECK(np[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(np[1] == doctest::Approx(1.0).epsilon(1e-14));
    np = normal_point(Body::ellipsoid({2.0, 1.0}), Point{1, 0});
    CHECK(np[0] == doctest::Approx(2.0));
    CHECK(std::abs(np[1]) < 1e-14);
    np = normal_point(Body::superellipse(4, 1, 1), Point{1, 1});
    CHECK(np[0] == doctest::Approx(std::pow(2.0, -0.25)).epsilon(1e-10));
    CHECK(np[1] == doctest::Approx(0.840896).epsilon(1e-6));
}

TEST_CASE("normal point attains the support value") {
    std::mt19937_64 rng(5);
    for (const auto& b : all_family()) {
        for (int i = 0; i < 50; ++i) {
            const auto xi = random_point(rng, b.dim());
            const auto p = normal_point(b, xi);
            double dot = 0.0;
            for (int j = 0; j < b.dim(); ++j) dot += p[j] * xi[j];
            CHECK(std::abs(dot - support(b, xi)) < 1e-10 * std::max(1.0, support(b, xi)));
            CHECK(gauge(b, p) == doctest::Approx(1.0).epsilon(1e-10));
            // P-(xi) is the point with inner normal xi
            const Point mxi{-xi[0], -xi[1]};
            if (b.dim() == 2) {
                const auto q = normal_point(b, mxi);
                CHECK(q[0] * xi[0] + q[1] * xi[1] == doctest::Approx(-support(b, mxi)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("boundary parametrization lies on the boundary") {
    for (const auto& b : planar_family()) {
        for (int i = 0; i < 100; ++i) {
            const double t = 2 * oracle::kPi * i / 100.0;
            const auto x = boundary_point(b, t);
            CHECK(gauge(b, Point{x[0], x[1]}) == doctest::Approx(1.0).epsilon(1e-10));
            const auto n = outward_normal(b, t);
            CHECK(std::hypot(n[0], n[1]) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("curvature examples") {
    for (double t : {0.0, 0.3, 2.0, 5.0}) CHECK(curvature(Body::ball(2, 2.0), t) == doctest::Approx(0.5).epsilon(1e-12));
    // parameter 0 is the point (2, 0) of the ellipse
    const auto el = Body::ellipsoid({2.0, 1.0});
    const auto x0 = boundary_point(el, 0.0);
    CHECK(x0[0] == doctest::Approx(2.0));
    CHECK(curvature(el, 0.0) == doctest::Approx(2.0).epsilon(1e-10));
    const auto se = Body::superellipse(4, 1, 1);
    CHECK(std::abs(curvature(se, 0.0)) < 1e-8);
    CHECK(gaussian_curvature(Body::ball(3, 2.0), Point{2, 0, 0}) == doctest::Approx(0.25));
    // ellipsoid (a,b,c) at (a,0,0): K = a^2 / (b^2 c^2)
    CHECK(gaussian_curvature(Body::ellipsoid({1.5, 1.0, 0.75}), Point{1.5, 0, 0}) ==
          doctest::Approx(1.5 * 1.5 / (1.0 * 0.75 * 0.75)).epsilon(1e-10));
}

TEST_CASE("curvature matches a finite-difference second derivative") {
    for (const auto& b : planar_family()) {
        for (int i = 1; i < 40; ++i) {
            const double t = 2 * oracle::kPi * (i + 0.37) / 40.0;
            const double h = 1e-4;
            const auto xm = boundary_point(b, t - h), x0 = boundary_point(b, t), xp = boundary_point(b, t + h);
            const double d1x = (xp[0] - xm[0]) / (2 * h), d1y = (xp[1] - xm[1]) / (2 * h);
            const double d2x = (xp[0] - 2 * x0[0] + xm[0]) / (h * h), d2y = (xp[1] - 2 * x0[1] + xm[1]) / (h * h);
            const double k = (d1x * d2y - d1y * d2x) / std::pow(d1x * d1x + d1y * d1y, 1.5);
            const double kk = curvature(b, t);
            if (std::isfinite(kk)) CHECK(std::abs(kk - k) < 1e-5 * std::max(1.0, std::abs(k)));
        }
    }
}

TEST_CASE("curvature duality between an ellipse and its polar") {
    const auto b = Body::ellipsoid({2.0, 1.0});
    for (int i = 0; i < 50; ++i) {
        const double t = 2 * oracle::kPi * (i + 0.5) / 50.0;
        auto dual = [&](double s) {
            const auto x = boundary_point(b, s);
            const auto n = outward_normal(b, s);
            const double h = x[0] * n[0] + x[1] * n[1];
            return std::array<double, 2>{n[0] / h, n[1] / h};
        };
        const double h = 1e-4;
        const auto ym = dual(t - h), y0 = dual(t), yp = dual(t + h);
        const double d1x = (yp[0] - ym[0]) / (2 * h), d1y = (yp[1] - ym[1]) / (2 * h);
        const double d2x = (yp[0] - 2 * y0[0] + ym[0]) / (h * h), d2y = (yp[1] - 2 * y0[1] + ym[1]) / (h * h);
        const double kstar = std::abs(d1x * d2y - d1y * d2x) / std::pow(d1x * d1x + d1y * d1y, 1.5);
        const auto x = boundary_point(b, t);
        const double lhs = kstar * std::abs(curvature(b, t));
        const double rhs = std::pow(std::hypot(x[0], x[1]) * std::hypot(y0[0], y0[1]), -3.0);
        CHECK(rel(lhs, rhs) < 1e-6);
        // the dual point is on the polar boundary
        CHECK(gauge(polar(b), Point{y0[0], y0[1]}) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("flat points") {
    CHECK(flat_points(Body::ball(2, 1.0)).empty());
    CHECK(flat_points(Body::ellipsoid({2.0, 1.0})).empty());
    CHECK(flat_points(Body::superellipse(2, 2.0, 1.0)).empty());
    for (int m : {4, 6}) {
        const auto fl = flat_points(Body::superellipse(m, 1, 1));
        REQUIRE(fl.size() == 4);
        for (const auto& f : fl) {
            CHECK(f.type == m);
            CHECK(std::hypot(f.normal[0], f.normal[1]) == doctest::Approx(1.0));
            CHECK(std::hypot(f.tangent[0], f.tangent[1]) == doctest::Approx(1.0));
            CHECK(std::abs(f.normal[0] * f.tangent[0] + f.normal[1] * f.tangent[1]) < 1e-12);
            CHECK(gauge(Body::superellipse(m, 1, 1), Point{f.point[0], f.point[1]}) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(std::abs(std::abs(f.point[0]) + std::abs(f.point[1]) - 1.0) < 1e-10);
        }
    }
    const double th = 0.5535;
    const auto base = flat_points(Body::superellipse(4, 1, 1));
    const auto rot = flat_points(Body::rotated(Body::superellipse(4, 1, 1), th));
    REQUIRE(rot.size() == 4);
    for (const auto& f : base) {
        const auto p = rotate_vec(f.point, th);
        const auto n = rotate_vec(f.normal, th);
        bool found = false;
        for (const auto& g : rot)
            if (std::hypot(g.point[0] - p[0], g.point[1] - p[1]) < 1e-8 &&
                std::hypot(g.normal[0] - n[0], g.normal[1] - n[1]) < 1e-8 && g.type == 4)
                found = true;
        CHECK(found);
    }
}

TEST_CASE("rotation") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ang(0.0, 2 * oracle::kPi);
    const auto se = Body::superellipse(4, 1, 1);
    const auto r0 = rotate(se, 0.0);
    const auto r90 = rotate(se, oracle::kPi / 2);
    for (int i = 0; i < 100; ++i) {
        const auto x = random_point(rng, 2);
        CHECK(std::abs(gauge(r0, x) - gauge(se, x)) <= 1e-15 * gauge(se, x));
        CHECK(rel(gauge(r90, x), gauge(se, x)) < 1e-12);
    }
    for (int i = 0; i < 1000; ++i) {
        const double th = ang(rng);
        const auto x = random_point(rng, 2);
        const auto ax = rotate_vec({x[0], x[1]}, th);
        CHECK(rel(gauge(rotate(se, th), Point{ax[0], ax[1]}), gauge(se, x)) < 1e-12);
    }
    CHECK_THROWS_AS(rotate(Body::ball(3, 1.0), 0.3), PreconditionError);
}

TEST_CASE("body descriptors round-trip and bad input is rejected") {
    for (const auto& b : all_family()) {
        const auto p = parse_body(b.descriptor());
        CHECK(p.descriptor() == b.descriptor());
    }
    CHECK(parse_body("superellipse:m=4,a=1,b=1,theta=0.5").descriptor() ==
          Body::rotated(Body::superellipse(4, 1, 1), 0.5).descriptor());
    for (const char* bad : {"", "ball", "ball:d=1,r=1", "ball:d=2,r=-1", "superellipse:m=3,a=1,b=1",
                            "ellipsoid:a=0,b=1", "cube:d=3", "ball:d=2,r=1,q=2", "ball:d=3,r=1,theta=0.2"}) {
        CHECK_THROWS_AS(parse_body(bad), PreconditionError);
    }
}

TEST_CASE("volumes") {
    CHECK(Body::ball(2, 1.0).volume() == doctest::Approx(oracle::kPi));
    CHECK(Body::ball(3, 1.0).volume() == doctest::Approx(4 * oracle::kPi / 3));
    CHECK(Body::ellipsoid({2.0, 1.0}).volume() == doctest::Approx(2 * oracle::kPi));
    CHECK(Body::superellipse(4, 1, 1).volume() == doctest::Approx(oracle::volume(oracle::superellipse(4, 1, 1))));
    CHECK(Body::polar_superellipse(4, 1, 1).volume() ==
          doctest::Approx(oracle::volume(oracle::polar_superellipse(4, 1, 1))));
    CHECK(Body::rotated(Body::superellipse(6, 1.5, 0.8), 0.4).volume() ==
          doctest::Approx(oracle::volume(oracle::superellipse(6, 1.5, 0.8))));
}
