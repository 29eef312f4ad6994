#include "latdisc/mollifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "latdisc/error.hpp"

namespace latdisc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxBumpDim = 8;

double sphere_area(int d) {
    // |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)
    return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

double raw_profile(double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

// Cumulative radial mass M(s) on a uniform grid, cubic Hermite in between.
class RadialTable {
  public:
    explicit RadialTable(int d) : dim_(d), cells_(1 << 14), h_(1.0 / cells_) {
        using boost::math::quadrature::gauss;
        auto density = [d](double s) { return raw_profile(s) * std::pow(s, d - 1); };
        mass_.assign(cells_ + 1, 0.0);
        double acc = 0.0;
        double comp = 0.0;
        for (int i = 0; i < cells_; ++i) {
            const double v = gauss<double, 8>::integrate(density, i * h_, (i + 1) * h_);
            const double y = v - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            mass_[i + 1] = acc;
        }
        total_ = acc;
        for (double& m : mass_) m /= total_;
        normalizer_ = 1.0 / (sphere_area(d) * total_);
    }

    double normalizer() const { return normalizer_; }

    double density(double s) const {
        if (s <= 0.0 || s >= 1.0) return 0.0;
        return raw_profile(s) * std::pow(s, dim_ - 1) / total_;
    }

    double mass(double s) const {
        if (s <= 0.0) return 0.0;
        if (s >= 1.0) return 1.0;
        const double x = s / h_;
        int i = static_cast<int>(x);
        if (i >= cells_) i = cells_ - 1;
        const double u = x - i;
        const double s0 = i * h_;
        const double s1 = (i + 1) * h_;
        const double m0 = mass_[i];
        const double m1 = mass_[i + 1];
        const double d0 = density(s0) * h_;
        const double d1 = density(s1) * h_;
        const double u2 = u * u;
        const double u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * m0 + (u3 - 2 * u2 + u) * d0 + (-2 * u3 + 3 * u2) * m1 + (u3 - u2) * d1;
    }

  private:
    int dim_;
    int cells_;
    double h_;
    double total_ = 1.0;
    double normalizer_ = 1.0;
    std::vector<double> mass_;
};

const RadialTable& radial_table(int d) {
    if (d < 1 || d > kMaxBumpDim) throw PreconditionError("bump: dimension must be in [1, 8]");
    static std::array<std::once_flag, kMaxBumpDim + 1> flags;
    static std::array<std::unique_ptr<RadialTable>, kMaxBumpDim + 1> tables;
    std::call_once(flags[d], [d] { tables[d] = std::make_unique<RadialTable>(d); });
    return *tables[d];
}

struct Chord {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;
};

// Planar bodies without a closed-form chord: f(r) = rho(k - r u) - t is convex,
// with f'(r) = -<grad rho, u> and grad rho(x) = normal_point(polar body, x).
Chord chord_generic(const Body& body, const Body& dual, double t, std::span<const double> k,
                    std::span<const double> u, double eps) {
    std::array<double, 2> p{};
    auto f = [&](double r) {
        p[0] = k[0] - r * u[0];
        p[1] = k[1] - r * u[1];
        return gauge(body, p) - t;
    };
    auto df = [&](double r) {
        p[0] = k[0] - r * u[0];
        p[1] = k[1] - r * u[1];
        if (p[0] == 0.0 && p[1] == 0.0) return 0.0;
        const Point g = normal_point(dual, p);
        return -(g[0] * u[0] + g[1] * u[1]);
    };
    auto clip = [eps](double a, double b) {
        Chord c;
        c.lo = std::max(a, 0.0);
        c.hi = std::min(b, eps);
        c.empty = !(c.lo < c.hi);
        return c;
    };
    // Largest r in [in, out] with f <= 0, given f(in) <= 0 < f(out) (or the reverse order).
    auto boundary = [&](double in, double out) {
        for (int it = 0; it < 64 && std::abs(out - in) > 1e-15 * eps; ++it) {
            const double mid = 0.5 * (in + out);
            if (f(mid) <= 0.0) {
                in = mid;
            } else {
                out = mid;
            }
        }
        return in;
    };

    const double f0 = f(0.0);
    const double fe = f(eps);
    if (f0 <= 0.0) return clip(0.0, fe <= 0.0 ? eps : boundary(0.0, eps));

    double a = 0.0;
    double b = eps;
    double fa = f0;
    double fb = fe;
    double da = df(0.0);
    double db = df(eps);
    double inside = -1.0;
    if (fe <= 0.0) {
        inside = eps;
    } else {
        if (da >= 0.0 || f0 + da * eps > 0.0) return {};
        if (db <= 0.0) return {};
        for (int it = 0; it < 200; ++it) {
            // Lower bound on min f from the tangent lines at a and b.
            const double rs = (fb - fa + da * a - db * b) / (da - db);
            if (fa + da * (rs - a) > 0.0) return {};
            const double mid = 0.5 * (a + b);
            const double fm = f(mid);
            if (fm <= 0.0) {
                inside = mid;
                break;
            }
            const double dm = df(mid);
            if (dm < 0.0) {
                a = mid;
                fa = fm;
                da = dm;
            } else {
                b = mid;
                fb = fm;
                db = dm;
            }
            if (b - a < 1e-15 * eps) return {};
        }
        if (inside < 0.0) return {};
    }
    const double lo = boundary(inside, 0.0);
    const double hi = fe <= 0.0 ? eps : boundary(inside, eps);
    return clip(lo, hi);
}

// {r in [0, eps] : rho(k - r u) <= t}, an interval by convexity.
Chord chord(const Body& body, double t, std::span<const double> k, std::span<const double> u, double eps) {
    const int d = static_cast<int>(k.size());
    const Body::Shape& shape = body.shape();

    auto clip = [eps](double a, double b) {
        Chord c;
        c.lo = std::max(a, 0.0);
        c.hi = std::min(b, eps);
        c.empty = !(c.lo < c.hi);
        return c;
    };

    if (std::holds_alternative<Ball>(shape) || std::holds_alternative<Ellipsoid>(shape)) {
        double A = 0.0;
        double B = 0.0;
        double C = 0.0;
        for (int i = 0; i < d; ++i) {
            const double a = std::holds_alternative<Ball>(shape) ? std::get<Ball>(shape).radius
                                                                   : std::get<Ellipsoid>(shape).semiaxes[i];
            const double ui = u[i] / a;
            const double ki = k[i] / a;
            A += ui * ui;
            B += ki * ui;
            C += ki * ki;
        }
        C -= t * t;
        const double disc = B * B - A * C;
        if (disc < 0.0) return {};
        const double sq = std::sqrt(disc);
        double r1;
        double r2;
        if (B >= 0.0) {
            const double q = B + sq;
            r2 = q / A;
            r1 = q > 0.0 ? C / q : 0.0;
        } else {
            const double q = B - sq;
            r1 = q / A;
            r2 = C / q;
        }
        if (r1 > r2) std::swap(r1, r2);
        return clip(r1, r2);
    }
    if (const auto* rot = std::get_if<Rotated2D>(&shape)) {
        const Vec2 kk = rotate_vec({k[0], k[1]}, -rot->angle);
        const Vec2 uu = rotate_vec({u[0], u[1]}, -rot->angle);
        return chord(*rot->inner, t, kk, uu, eps);
    }

    return chord_generic(body, polar(body), t, k, u, eps);
}

struct Integral {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
Integral adaptive(F& f, double a, double b, double abs_tol, int depth) {
    using boost::math::quadrature::gauss_kronrod;
    Integral out;
    out.value = gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &out.error);
    if (out.error <= abs_tol || depth == 0) return out;
    const double mid = 0.5 * (a + b);
    const Integral l = adaptive(f, a, mid, abs_tol * 0.5, depth - 1);
    const Integral r = adaptive(f, mid, b, abs_tol * 0.5, depth - 1);
    return {l.value + r.value, l.error + r.error};
}

// Adaptive Gauss-Kronrod over n equal panels, absolute tolerance abs_tol in total.
template <class F>
Integral panels(F&& f, double a, double b, int n, double abs_tol) {
    Integral out;
    for (int i = 0; i < n; ++i) {
        const double x0 = a + (b - a) * i / n;
        const double x1 = a + (b - a) * (i + 1) / n;
        const Integral r = adaptive(f, x0, x1, abs_tol / n, 16);
        out.value += r.value;
        out.error += r.error;
    }
    return out;
}

MollifiedValue contribution(const Body& body, double t, double eps, std::span<const double> k,
                            const MollifierOptions& opts) {
    const int d = body.dim();
    const RadialTable& table = radial_table(d);
    MollifiedValue out;
    if (d == 2) {
        auto f = [&](double phi) {
            const std::array<double, 2> u{std::cos(phi), std::sin(phi)};
            const Chord c = chord(body, t, k, u, eps);
            if (c.empty) return 0.0;
            return table.mass(c.hi / eps) - table.mass(c.lo / eps);
        };
        const Integral r = panels(f, 0.0, 2.0 * kPi, 64, opts.point_tol * 2.0 * kPi);
        out.value = r.value / (2.0 * kPi);
        out.error = r.error / (2.0 * kPi) + 1e-14;
    } else if (d == 3) {
        double inner_error = 0.0;
        auto outer = [&](double theta) {
            const double st = std::sin(theta);
            const double ct = std::cos(theta);
            auto inner = [&](double phi) {
                const std::array<double, 3> u{st * std::cos(phi), st * std::sin(phi), ct};
                const Chord c = chord(body, t, k, u, eps);
                if (c.empty) return 0.0;
                return table.mass(c.hi / eps) - table.mass(c.lo / eps);
            };
            const Integral r = panels(inner, 0.0, 2.0 * kPi, 32, opts.point_tol * 2.0 * kPi);
            inner_error = std::max(inner_error, r.error);
            return r.value * st;
        };
        const Integral r = panels(outer, 0.0, kPi, 16, opts.point_tol * 2.0 * kPi);
        out.value = r.value / (4.0 * kPi);
        out.error = r.error / (4.0 * kPi) + inner_error * 0.5 + 1e-14;
    } else {
        throw PreconditionError("mollified counts support d = 2 and d = 3");
    }
    out.value = std::clamp(out.value, 0.0, 1.0);
    out.band = 1;
    return out;
}

void check_mollifier_args(const Body& body, double t, double eps, const MollifierOptions& opts) {
    if (body.dim() != 2 && body.dim() != 3) throw PreconditionError("mollified counts support d = 2 and d = 3");
    if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("mollifier: t must be finite and >= 0");
    if (!(eps > 0.0) || !(eps <= opts.eps_max)) {
        throw PreconditionError("mollifier: need 0 < eps <= " + std::to_string(opts.eps_max));
    }
    if (!(eps < t * body.inradius())) throw PreconditionError("mollifier: need eps < t * inradius");
}

}  // namespace

double bump_normalizer(int dim) { return radial_table(dim).normalizer(); }

double bump_profile(int dim, double s) { return bump_normalizer(dim) * raw_profile(std::abs(s)); }

double bump_radial_mass(int dim, double s) { return radial_table(dim).mass(s); }

double bump_value(const Bump& bump, std::span<const double> x) {
    if (static_cast<int>(x.size()) != bump.dim) throw PreconditionError("bump_value: dimension mismatch");
    if (!(bump.eps > 0.0)) throw PreconditionError("bump_value: eps must be positive");
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double s = std::sqrt(r2) / bump.eps;
    if (s >= 1.0) return 0.0;
    return std::pow(bump.eps, -bump.dim) * bump_profile(bump.dim, s);
}

MollifiedValue point_contribution(const Body& body, double t, double eps, std::span<const double> k,
                                  const MollifierOptions& opts) {
    if (static_cast<int>(k.size()) != body.dim()) throw PreconditionError("point_contribution: dimension mismatch");
    if (body.dim() != 2 && body.dim() != 3) throw PreconditionError("mollified counts support d = 2 and d = 3");
    if (!(eps > 0.0) || !(t >= 0.0)) throw PreconditionError("point_contribution: need eps > 0, t >= 0");
    return contribution(body, t, eps, k, opts);
}

MollifiedValue mollified_count(const Body& body, double t, double eps, const MollifierOptions& opts) {
    check_mollifier_args(body, t, eps, opts);
    const double margin = eps / body.inradius();
    const double inner = t - margin;
    MollifiedValue out;
    out.inside = inner >= 0.0 ? count_points(body, inner, opts.enumeration) : 0;
    const auto band = annulus_points(body, inner >= 0.0 ? inner : -1.0, t + margin, opts.enumeration);
    out.band = band.size();

    std::vector<MollifiedValue> parts(band.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<double> k(body.dim());
        for (std::size_t i = begin; i < end; ++i) {
            for (int j = 0; j < body.dim(); ++j) k[j] = static_cast<double>(band[i][j]);
            parts[i] = contribution(body, t, eps, k, opts);
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(opts.enumeration.threads, static_cast<unsigned>(band.size())));
    if (n <= 1) {
        work(0, band.size());
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n; ++i) {
            pool.emplace_back(work, band.size() * i / n, band.size() * (i + 1) / n);
        }
        for (auto& th : pool) th.join();
    }
    // Fixed-order pairwise reduction.
    std::vector<double> values(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        values[i] = parts[i].value;
        out.error += parts[i].error;
    }
    while (values.size() > 1) {
        std::vector<double> next((values.size() + 1) / 2);
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] = values[2 * i] + (2 * i + 1 < values.size() ? values[2 * i + 1] : 0.0);
        }
        values.swap(next);
    }
    out.value = static_cast<double>(out.inside) + (values.empty() ? 0.0 : values[0]);
    return out;
}

MollifiedValue mollified_rest(const Body& body, double t, double eps, const MollifierOptions& opts) {
    MollifiedValue out = mollified_count(body, t, eps, opts);
    out.value -= std::pow(t, body.dim()) * body.volume();
    return out;
}

SandwichReport sandwich_check(const Body& body, const std::vector<TEps>& grid, const MollifierOptions& opts) {
    if (grid.empty()) throw PreconditionError("sandwich_check: empty grid");
    if (body.inradius() < 1.0) {
        throw PreconditionError("sandwich_check: the sandwich needs a body containing the unit ball");
    }
    for (const auto& g : grid) {
        if (!(g.eps > 0.0) || !(g.eps < g.t)) throw PreconditionError("sandwich_check: need 0 < eps < t");
    }
    const int d = body.dim();
    const double V = body.volume();
    SandwichReport rep;
    for (const auto& g : grid) {
        SandwichRow row;
        row.t = g.t;
        row.eps = g.eps;
        row.count = count_points(body, g.t, opts.enumeration);
        row.lower = mollified_count(body, g.t - g.eps, g.eps, opts);
        row.upper = mollified_count(body, g.t + g.eps, g.eps, opts);
        const double n = static_cast<double>(row.count);
        row.violated = row.lower.value - row.lower.error > n || row.upper.value + row.upper.error < n;
        if (row.violated) ++rep.violations;

        const double E = std::abs(n - V * std::pow(g.t, d));
        const double El = std::abs(row.lower.value - V * std::pow(g.t - g.eps, d));
        const double Eu = std::abs(row.upper.value - V * std::pow(g.t + g.eps, d));
        const double scale = std::pow(g.t, d - 1) * g.eps;
        rep.C_min = std::max({rep.C_min, (El - E) / scale, (E - Eu) / scale});
        rep.rows.push_back(row);
    }
    return rep;
}

ShellDiag shell_bound_diag(const Body& body, double tau, double eps, const MollifierOptions& opts) {
    if (!(tau >= 1.0) || !std::isfinite(tau)) throw PreconditionError("shell_bound_diag: need tau >= 1");
    if (!(eps > 0.0) || !(eps < 1.0)) throw PreconditionError("shell_bound_diag: need 0 < eps < 1");
    ShellDiag out;
    out.tau = tau;
    out.eps = eps;
    out.delta0 = 0.5 * body.inradius();
    out.eps_check = 4.0 * eps / out.delta0;
    if (!(out.eps_check < (tau - eps) * body.inradius())) {
        throw PreconditionError("shell_bound_diag: 4 eps / delta0 too large for this tau");
    }
    MollifierOptions mo = opts;
    mo.eps_max = std::max(opts.eps_max, out.eps_check);

    const int d = body.dim();
    const double V = body.volume();
    const double ec = out.eps_check;
    out.S = shell_count(body, tau, eps, opts.enumeration).count;
    out.rhs_linear = std::pow(tau, d - 1) * eps;

    const double step = 1e-3 * eps;
    auto derivative = [&](double t) {
        const double up = mollified_count(body, t + step, ec, mo).value;
        const double dn = mollified_count(body, t - step, ec, mo).value;
        return (up - dn) / (2.0 * step);
    };

    double min_der = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= 8; ++j) {
        const double t = tau - eps + 2.0 * eps * j / 8.0;
        min_der = std::min(min_der, derivative(t));
    }
    out.min_derivative = min_der;
    out.vacuous = out.S == 0;
    out.c0_hat = out.vacuous ? 0.0 : min_der * eps / static_cast<double>(out.S);

    using boost::math::quadrature::gauss;
    auto integrand = [&](double t) {
        const double e = mollified_count(body, t, ec, mo).value - V * std::pow(t, d);
        return e * e * derivative(t);
    };
    out.rhs_integral = gauss<double, 8>::integrate(integrand, tau - 0.5 * eps, tau + 0.5 * eps);
    out.rhs_cuberoot = std::cbrt(std::max(0.0, out.rhs_integral));
    return out;
}

}  // namespace latdisc
