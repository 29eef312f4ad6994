#include "latdisc/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/minima.hpp>

#include "latdisc/error.hpp"
#include "latdisc/fit.hpp"
#include "latdisc/lattice.hpp"
#include "latdisc/mollifier.hpp"

namespace latdisc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
using cplx = std::complex<double>;

double sphere_area(int d) { return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d); }

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Transform of the radius-r ball in R^d at frequency modulus s.
double ball_ft(int d, double r, double s) {
    const double vol = std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(r, d);
    const double x = r * s;
    if (x < 1e-6) return vol * (1.0 - x * x / (2.0 * (d + 2)));
    const double nu = 0.5 * d;
    return std::pow(r, d) * std::pow(kTwoPi / x, nu) * std::cyl_bessel_j(nu, x);
}

double max_speed(const Body& body) {
    double best = 0.0;
    for (int j = 0; j < 256; ++j) {
        const Vec2 v = boundary_velocity(body, kTwoPi * j / 256.0);
        best = std::max(best, std::hypot(v[0], v[1]));
    }
    return best;
}

FourierSample boundary_quadrature(const Body& body, const Vec2& xi) {
    const double s2 = xi[0] * xi[0] + xi[1] * xi[1];
    const double s = std::sqrt(s2);
    const auto n = static_cast<std::size_t>(std::ceil(10.0 * s * max_speed(body))) + 128;
    cplx coarse = 0.0;
    cplx fine = 0.0;
    for (std::size_t j = 0; j < 2 * n; ++j) {
        const double t = kTwoPi * static_cast<double>(j) / static_cast<double>(2 * n);
        const auto pv = boundary_point_velocity(body, t);
        const double flux = xi[0] * pv[1][1] - xi[1] * pv[1][0];
        const double phase = xi[0] * pv[0][0] + xi[1] * pv[0][1];
        const cplx term = flux * cplx(std::cos(phase), -std::sin(phase));
        fine += term;
        if (j % 2 == 0) coarse += term;
    }
    const cplx i(0.0, 1.0);
    const cplx v2 = i / s2 * fine * (kTwoPi / static_cast<double>(2 * n));
    const cplx v1 = i / s2 * coarse * (kTwoPi / static_cast<double>(n));
    FourierSample out;
    out.xi = {xi[0], xi[1]};
    out.value = v2;
    out.method = FtMethod::boundary_quadrature;
    out.error = std::abs(v2 - v1);
    if (out.error > 1e-6 * std::abs(v2) + 1e-12) {
        throw ConvergenceError("indicator_ft: boundary quadrature did not converge at |xi| = " + std::to_string(s));
    }
    return out;
}

FourierSample ft_impl(const Body& body, std::span<const double> xi) {
    const double s = norm(xi);
    FourierSample out;
    out.xi.assign(xi.begin(), xi.end());
    if (s == 0.0) {
        out.value = body.volume();
        return out;
    }
    return std::visit(
        [&](const auto& sh) -> FourierSample {
            using S = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<S, Ball>) {
                out.value = ball_ft(sh.dim, sh.radius, s);
                return out;
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                double prod = 1.0;
                double acc = 0.0;
                for (std::size_t i = 0; i < xi.size(); ++i) {
                    prod *= sh.semiaxes[i];
                    acc += (sh.semiaxes[i] * xi[i]) * (sh.semiaxes[i] * xi[i]);
                }
                out.value = prod * ball_ft(static_cast<int>(xi.size()), 1.0, std::sqrt(acc));
                return out;
            } else if constexpr (std::is_same_v<S, Rotated2D>) {
                const Vec2 y = rotate_vec({xi[0], xi[1]}, -sh.angle);
                FourierSample inner = ft_impl(*sh.inner, y);
                inner.xi = out.xi;
                return inner;
            } else {
                return boundary_quadrature(body, {xi[0], xi[1]});
            }
        },
        body.shape());
}

// Parameter of the boundary point maximizing <x(t), u>.
double argmax_parameter(const Body& body, const Vec2& u) {
    auto g = [&](double t) {
        const Vec2 p = boundary_point(body, t);
        return p[0] * u[0] + p[1] * u[1];
    };
    constexpr int kSamples = 2048;
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < kSamples; ++j) {
        const double v = g(kTwoPi * j / kSamples);
        if (v > best_v) {
            best_v = v;
            best = j;
        }
    }
    const double h = kTwoPi / kSamples;
    const auto r = boost::math::tools::brent_find_minima([&](double t) { return -g(t); }, (best - 1) * h,
                                                         (best + 1) * h, 52);
    return r.first;
}

double arclength(const Body& body, double a, double b) {
    auto speed = [&](double t) {
        const Vec2 v = boundary_velocity(body, t);
        return std::hypot(v[0], v[1]);
    };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(speed, a, b, 15, 1e-12);
}

double planar_cap(const Body& body, const Vec2& u, double depth) {
    const std::array<double, 2> uu{u[0], u[1]};
    const double level = support(body, uu) - depth;
    auto g = [&](double t) {
        const Vec2 p = boundary_point(body, t);
        return p[0] * u[0] + p[1] * u[1];
    };
    const double t0 = argmax_parameter(body, u);
    constexpr int kSteps = 2048;
    const double step = kTwoPi / kSteps;
    auto edge = [&](double dir) {
        double in = t0;
        for (int j = 1; j <= kSteps / 2; ++j) {
            const double out = t0 + dir * j * step;
            if (g(out) < level) {
                double a = in;
                double b = out;
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (a + b);
                    if (g(mid) >= level) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return a;
            }
            in = out;
        }
        return std::numeric_limits<double>::quiet_NaN();
    };
    const double hi = edge(1.0);
    const double lo = edge(-1.0);
    if (std::isnan(hi) || std::isnan(lo)) return arclength(body, 0.0, kTwoPi);
    return arclength(body, lo, hi);
}

//---------------------------------------------------------------------------//
// Radial transform of the bump, tabulated with Hermite interpolation.

class BumpFtTable {
  public:
    static constexpr double kStep = 0.02;
    static constexpr double kMaxRho = 1500.0;

    explicit BumpFtTable(int d) : dim_(d) {
        using boost::math::quadrature::gauss;
        using boost::math::quadrature::gauss_kronrod;
        const double cd = bump_normalizer(d);
        const double area = d == 1 ? 1.0 : sphere_area(d - 1);
        auto projection = [&](double x) {
            const double top = std::sqrt(std::max(0.0, 1.0 - x * x));
            if (top == 0.0) return 0.0;
            if (d == 1) return cd * std::exp(-1.0 / (1.0 - x * x));
            auto f = [&](double u) {
                const double r2 = x * x + u * u;
                if (r2 >= 1.0) return 0.0;
                return cd * std::exp(-1.0 / (1.0 - r2)) * std::pow(u, d - 2);
            };
            return area * gauss_kronrod<double, 31>::integrate(f, 0.0, top, 15, 1e-14);
        };
        constexpr int kPanels = 256;
        const auto& xs = gauss<double, 8>::abscissa();
        const auto& ws = gauss<double, 8>::weights();
        for (int p = 0; p < kPanels; ++p) {
            const double a = static_cast<double>(p) / kPanels;
            const double half = 0.5 / kPanels;
            const double mid = a + half;
            auto push = [&](double x, double w) {
                nodes_.push_back(x);
                weights_.push_back(2.0 * w * half * projection(x));
            };
            // Even order: abscissae are the positive nodes only.
            for (std::size_t i = 0; i < xs.size(); ++i) {
                push(mid - half * xs[i], ws[i]);
                push(mid + half * xs[i], ws[i]);
            }
        }
    }

    void ensure(double rho) {
        rho = std::min(rho, kMaxRho);
        const auto need = static_cast<std::size_t>(std::ceil(rho / kStep)) + 2;
        if (values_.size() >= need) return;
        const std::size_t start = values_.size();
        values_.resize(need);
        derivs_.resize(need);
        // Phases advanced by complex rotation, reseeded every 256 steps.
        std::vector<cplx> phase(nodes_.size());
        std::vector<cplx> rot(nodes_.size());
        for (std::size_t j = 0; j < nodes_.size(); ++j) rot[j] = std::polar(1.0, kStep * nodes_[j]);
        for (std::size_t i = start; i < need; ++i) {
            const double rho_i = kStep * static_cast<double>(i);
            if (i == start || (i - start) % 256 == 0) {
                for (std::size_t j = 0; j < nodes_.size(); ++j) phase[j] = std::polar(1.0, rho_i * nodes_[j]);
            }
            double v = 0.0;
            double dv = 0.0;
            for (std::size_t j = 0; j < nodes_.size(); ++j) {
                v += weights_[j] * phase[j].real();
                dv -= weights_[j] * nodes_[j] * phase[j].imag();
                phase[j] *= rot[j];
            }
            values_[i] = v;
            derivs_[i] = dv;
        }
    }

    double value(double rho) {
        rho = std::abs(rho);
        if (rho >= kMaxRho) return 0.0;
        ensure(rho * 1.25 + 1.0);
        const double x = rho / kStep;
        const auto i = static_cast<std::size_t>(x);
        const double u = x - static_cast<double>(i);
        const double u2 = u * u;
        const double u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * values_[i] + (u3 - 2 * u2 + u) * derivs_[i] * kStep +
               (-2 * u3 + 3 * u2) * values_[i + 1] + (u3 - u2) * derivs_[i + 1] * kStep;
    }

    // Nonincreasing upper envelope of |zeta^| on [rho, inf).
    double envelope(double rho) {
        rho = std::abs(rho);
        ensure(kMaxRho);
        build_envelope();
        if (rho >= kMaxRho) return tail_fit(rho);
        const auto i = static_cast<std::size_t>(rho / kStep);
        return std::max(suffix_[std::min(i, suffix_.size() - 1)], tail_fit(kMaxRho));
    }

    double tail_fit(double rho) const { return std::exp(fit_a_ - fit_b_ * std::sqrt(rho)); }

  private:
    void build_envelope() {
        if (!suffix_.empty()) return;
        suffix_.assign(values_.size(), 0.0);
        double m = 0.0;
        for (std::size_t i = values_.size(); i-- > 0;) {
            m = std::max(m, std::abs(values_[i]) + 1e-15);
            suffix_[i] = m;
        }
        // log|zeta^| ~ a - b sqrt(rho) fitted to local peaks above the noise floor.
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t i = 1; i + 1 < values_.size(); ++i) {
            const double v = std::abs(values_[i]);
            const double rho = kStep * static_cast<double>(i);
            if (rho < 10.0 || v < 1e-12) continue;
            if (v >= std::abs(values_[i - 1]) && v >= std::abs(values_[i + 1])) {
                xs.push_back(std::sqrt(rho));
                ys.push_back(std::log(v));
            }
        }
        if (xs.size() > 40) {
            xs.erase(xs.begin(), xs.end() - 40);
            ys.erase(ys.begin(), ys.end() - 40);
        }
        if (xs.size() >= 4) {
            const LinearFit f = ols(xs, ys);
            double shift = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                shift = std::max(shift, ys[i] - (f.intercept + f.slope * xs[i]));
            }
            fit_a_ = f.intercept + shift + std::log(2.0);
            fit_b_ = std::max(0.0, -f.slope);
        } else {
            fit_a_ = 0.0;
            fit_b_ = 0.0;
        }
    }

    int dim_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> values_;
    std::vector<double> derivs_;
    std::vector<double> suffix_;
    double fit_a_ = 0.0;
    double fit_b_ = 0.0;
};

BumpFtTable& bump_table(int d, std::unique_lock<std::mutex>& lock) {
    static std::mutex mtx;
    static std::array<std::unique_ptr<BumpFtTable>, 9> tables;
    if (d < 1 || d > 8) throw PreconditionError("bump transform: dimension must be in [1, 8]");
    lock = std::unique_lock<std::mutex>(mtx);
    if (!tables[d]) tables[d] = std::make_unique<BumpFtTable>(d);
    return *tables[d];
}

double bump_envelope(int d, double rho) {
    std::unique_lock<std::mutex> lock;
    return bump_table(d, lock).envelope(rho);
}

// |f^(xi)| <= C |xi|^-alpha for |xi| >= 1, estimated on sampled frequencies.
struct FtBound {
    double C = 0.0;
    double alpha = 1.5;
};

FtBound ft_bound(const Body& body) {
    FtBound b;
    const int d = body.dim();
    b.alpha = 0.5 * (d + 1);
    bool closed = std::holds_alternative<Ball>(body.shape()) || std::holds_alternative<Ellipsoid>(body.shape());
    if (const auto* r = std::get_if<Rotated2D>(&body.shape())) {
        closed = std::holds_alternative<Ball>(r->inner->shape()) || std::holds_alternative<Ellipsoid>(r->inner->shape());
    }
    if (!closed && d == 2) {
        const auto fp = flat_points(body);
        for (const auto& p : fp) b.alpha = std::min(b.alpha, 1.0 + 1.0 / p.type);
    }
    const int nr = closed ? 4000 : 120;
    const double rmax = closed ? 400.0 : 60.0;
    const int nd = d == 2 ? 16 : 1;
    for (int k = 0; k < nd; ++k) {
        std::vector<double> u(d, 0.0);
        if (d == 2) {
            u[0] = std::cos(kPi * k / nd);
            u[1] = std::sin(kPi * k / nd);
        } else {
            for (int i = 0; i < d; ++i) u[i] = 1.0 / std::sqrt(static_cast<double>(d));
        }
        for (int j = 0; j <= nr; ++j) {
            const double r = std::pow(rmax, static_cast<double>(j) / nr);
            std::vector<double> xi(d);
            for (int i = 0; i < d; ++i) xi[i] = r * u[i];
            b.C = std::max(b.C, std::pow(r, b.alpha) * std::abs(ft_impl(body, xi).value));
        }
    }
    if (d > 2 && !std::holds_alternative<Ball>(body.shape())) {
        // Directional sampling is thin in d >= 3; use the ball bound scaled by the extreme semiaxes.
        if (const auto* e = std::get_if<Ellipsoid>(&body.shape())) {
            const double amin = *std::min_element(e->semiaxes.begin(), e->semiaxes.end());
            double prod = 1.0;
            for (double a : e->semiaxes) prod *= a;
            FtBound unit = ft_bound(Body::ball(d, 1.0));
            b.C = std::max(b.C, unit.C * prod * std::pow(amin, -b.alpha));
        }
    }
    b.C *= 1.5;
    return b;
}

}  // namespace

FourierSample indicator_ft(const Body& body, std::span<const double> xi) {
    if (static_cast<int>(xi.size()) != body.dim()) throw PreconditionError("indicator_ft: dimension mismatch");
    for (double v : xi) {
        if (!std::isfinite(v)) throw PreconditionError("indicator_ft: frequency must be finite");
    }
    return ft_impl(body, xi);
}

CapMeasure cap_measure(const Body& body, std::span<const double> xi) {
    if (static_cast<int>(xi.size()) != body.dim()) throw PreconditionError("cap_measure: dimension mismatch");
    const double s = norm(xi);
    if (!(s >= 1.0)) throw PreconditionError("cap_measure: need |xi| >= 1");
    CapMeasure out;
    out.xi.assign(xi.begin(), xi.end());
    const double depth = 1.0 / s;
    if (body.dim() == 2) {
        const Vec2 u{xi[0] / s, xi[1] / s};
        out.gamma_plus = planar_cap(body, u, depth);
        out.gamma_minus = planar_cap(body, {-u[0], -u[1]}, depth);
        return out;
    }
    const auto* b = std::get_if<Ball>(&body.shape());
    if (b == nullptr) throw PreconditionError("cap_measure: d >= 3 supports balls only");
    const int d = b->dim;
    const double r = b->radius;
    double cap;
    if (depth >= 2.0 * r) {
        cap = sphere_area(d) * std::pow(r, d - 1);
    } else {
        // Area of {cos theta >= 1 - depth/r}: |S^{d-2}| r^{d-1} int_0^theta0 sin^{d-2}.
        const double c0 = 1.0 - depth / r;
        const double x = 1.0 - c0 * c0;
        const double a = 0.5 * (d - 1);
        double half = 0.5 * boost::math::beta(a, 0.5, x);
        if (c0 < 0.0) half = boost::math::beta(a, 0.5) - half;
        cap = sphere_area(d - 1) * std::pow(r, d - 1) * half;
    }
    out.gamma_plus = cap;
    out.gamma_minus = cap;
    return out;
}

std::vector<Vec2> default_directions(int n) {
    if (n < 1) throw PreconditionError("need at least one direction");
    std::vector<Vec2> out;
    for (int k = 0; k < n; ++k) {
        const double a = kPi * (k + 0.5) / n;
        out.push_back({std::cos(a), std::sin(a)});
    }
    return out;
}

std::vector<double> log_radii(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw PreconditionError("log_radii: need 0 < lo < hi, n >= 2");
    std::vector<double> out;
    for (int j = 0; j < n; ++j) out.push_back(lo * std::pow(hi / lo, static_cast<double>(j) / (n - 1)));
    return out;
}

double ft_envelope(const Body& body, const Vec2& u, double r, int samples) {
    if (body.dim() != 2) throw PreconditionError("ft_envelope: planar bodies only");
    const std::array<double, 2> uu{u[0], u[1]};
    const double period = kPi / support(body, uu);
    double best = 0.0;
    for (int j = 0; j < samples; ++j) {
        const double s = r + period * j / samples;
        const std::array<double, 2> xi{s * u[0], s * u[1]};
        best = std::max(best, std::abs(ft_impl(body, xi).value));
    }
    return best;
}

DecayScan decay_scan(const Body& body, const std::vector<double>& radii, const std::vector<Vec2>& directions,
                     bool fit_flat) {
    if (body.dim() != 2) throw PreconditionError("decay_scan: planar bodies only");
    if (radii.size() < 2 || directions.empty()) throw PreconditionError("decay_scan: empty grid");
    const double lo = *std::min_element(radii.begin(), radii.end());
    const double hi = *std::max_element(radii.begin(), radii.end());
    if (!(lo > 0.0) || hi < 100.0 * lo) throw PreconditionError("decay_scan: radius grid must cover two decades");
    DecayScan out;
    out.directions = directions;
    out.radii = radii;
    out.direction_sup.assign(directions.size(), 0.0);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        for (std::size_t k = 0; k < directions.size(); ++k) {
            const double r = radii[i];
            const std::array<double, 2> xi{r * directions[k][0], r * directions[k][1]};
            DecayRow row;
            row.xi_norm = r;
            row.direction_index = static_cast<int>(k);
            row.abs_ft = std::abs(ft_impl(body, xi).value);
            row.scaled = std::pow(1.0 + r, 1.5) * row.abs_ft;
            out.sup_scaled = std::max(out.sup_scaled, row.scaled);
            if (i % 2 == 0) out.sup_scaled_half = std::max(out.sup_scaled_half, row.scaled);
            out.direction_sup[k] = std::max(out.direction_sup[k], row.scaled);
            out.rows.push_back(row);
        }
    }
    const bool curved = std::holds_alternative<Ball>(body.shape()) || std::holds_alternative<Ellipsoid>(body.shape());
    if (fit_flat && !curved) {
        std::vector<double> fr;
        for (double r : radii) {
            if (r >= 10.0) fr.push_back(r);
        }
        if (fr.size() < 4) fr = radii;
        std::sort(fr.begin(), fr.end());
        for (const auto& p : flat_points(body)) {
            const bool dup = std::any_of(out.flat.begin(), out.flat.end(), [&](const FlatDecay& f) {
                return std::abs(f.normal[0] * p.normal[0] + f.normal[1] * p.normal[1]) > 1.0 - 1e-9;
            });
            if (dup) continue;
            FlatDecay fd;
            fd.normal = p.normal;
            fd.type = p.type;
            fd.radii = fr;
            std::vector<double> lx;
            std::vector<double> ly;
            for (double r : fr) {
                const double e = ft_envelope(body, p.normal, r);
                fd.envelope.push_back(e);
                lx.push_back(std::log(r));
                ly.push_back(std::log(e));
            }
            const LinearFit f = ols(lx, ly);
            fd.slope = f.slope;
            fd.slope_stderr = f.slope_stderr;
            out.flat.push_back(fd);
        }
    }
    return out;
}

double bump_ft(int dim, double rho) {
    std::unique_lock<std::mutex> lock;
    return bump_table(dim, lock).value(rho);
}

double poisson_tail_bound(const Body& body, double t, double eps, double K) {
    if (!(t > 0.0) || !(eps > 0.0) || !(K >= 1.0)) throw PreconditionError("poisson tail: need t, eps > 0, K >= 1");
    const int d = body.dim();
    const FtBound fb = ft_bound(body);
    const double shift = 0.5 * std::sqrt(static_cast<double>(d));
    const double u0 = K - 2.0 * shift;
    if (!(u0 > 0.0)) throw PreconditionError("poisson tail: K too small for the lattice-sum bound");
    const double area = sphere_area(d);
    // term bound F(u) = t^d C (2 pi t u)^-alpha env(2 pi eps u), summed as
    // |S^{d-1}| int_{u0}^inf F(u) (u + shift)^{d-1} du.
    auto F = [&](double u, double env) {
        return std::pow(t, d) * fb.C * std::pow(kTwoPi * t * u, -fb.alpha) * env * std::pow(u + shift, d - 1);
    };
    const double rho_end = BumpFtTable::kMaxRho;
    const double u_end = rho_end / (kTwoPi * eps);
    double total = 0.0;
    const double du = BumpFtTable::kStep / (kTwoPi * eps);
    for (double u = u0; u < u_end; u += du) {
        const double env = bump_envelope(d, kTwoPi * eps * u);
        // F is decreasing in u apart from the (u + shift)^{d-1} factor.
        const double hi = std::min(u + du, u_end);
        const double bound = std::pow(t, d) * fb.C * std::pow(kTwoPi * t * u, -fb.alpha) * env *
                             std::pow(hi + shift, d - 1);
        total += bound * (hi - u);
    }
    std::unique_lock<std::mutex> lock;
    BumpFtTable& table = bump_table(d, lock);
    (void)table.envelope(rho_end);
    auto tail = [&](double u) { return F(u, table.tail_fit(kTwoPi * eps * u)); };
    const double start = std::max(u0, u_end);
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        tail, start, std::numeric_limits<double>::infinity(), 15, 1e-10);
    return area * total;
}

PoissonResult poisson_rest(const Body& body, double t, double eps, double K, const PoissonOptions& opts) {
    if (!(t > 0.0) || !std::isfinite(t)) throw PreconditionError("poisson_rest: need t > 0");
    if (!(eps > 0.0) || !(eps <= 1.0)) throw PreconditionError("poisson_rest: need 0 < eps <= 1");
    if (!(K >= 1.0) || !(K <= 1e5)) throw PreconditionError("poisson_rest: need 1 <= K <= 1e5");
    const int d = body.dim();
    PoissonResult out;
    out.t = t;
    out.eps = eps;
    out.K = K;
    out.tail_bound = poisson_tail_bound(body, t, eps, K);
    if (out.tail_bound > opts.tail_tol) {
        double k2 = K;
        while (k2 < 1e5 && poisson_tail_bound(body, t, eps, k2) > opts.tail_tol) k2 *= 1.5;
        throw ConvergenceError("poisson_rest: tail bound " + std::to_string(out.tail_bound) + " exceeds tolerance " +
                               std::to_string(opts.tail_tol) + "; suggested K >= " +
                               std::to_string(static_cast<long long>(std::ceil(k2))));
    }

    // Lattice points 0 < |k| <= K ordered by |k|^2, then lexicographically.
    const auto kmax = static_cast<std::int64_t>(std::floor(K));
    const double K2 = K * K;
    std::vector<std::vector<std::int64_t>> ks;
    std::vector<std::int64_t> k(d, -kmax);
    while (true) {
        double n2 = 0.0;
        for (auto v : k) n2 += static_cast<double>(v) * static_cast<double>(v);
        if (n2 > 0.0 && n2 <= K2) ks.push_back(k);
        int i = d - 1;
        while (i >= 0 && k[i] == kmax) {
            k[i] = -kmax;
            --i;
        }
        if (i < 0) break;
        ++k[i];
    }
    auto norm2 = [](const std::vector<std::int64_t>& v) {
        std::int64_t s = 0;
        for (auto x : v) s += x * x;
        return s;
    };
    std::stable_sort(ks.begin(), ks.end(), [&](const auto& a, const auto& b) {
        const auto na = norm2(a);
        const auto nb = norm2(b);
        if (na != nb) return na < nb;
        return a < b;
    });
    out.terms = ks.size();

    std::unique_lock<std::mutex> lock;
    BumpFtTable& table = bump_table(d, lock);
    table.ensure(kTwoPi * eps * K * 1.25 + 1.0);
    double re = 0.0;
    double re_c = 0.0;
    double im = 0.0;
    const double td = std::pow(t, d);
    std::vector<double> xi(d);
    for (const auto& kk : ks) {
        double n = 0.0;
        for (int i = 0; i < d; ++i) {
            xi[i] = kTwoPi * t * static_cast<double>(kk[i]);
            n += static_cast<double>(kk[i]) * static_cast<double>(kk[i]);
        }
        const double z = table.value(kTwoPi * eps * std::sqrt(n));
        const cplx v = td * ft_impl(body, xi).value * z;
        // Neumaier step for the real part.
        const double s = re + v.real();
        if (std::abs(re) >= std::abs(v.real())) {
            re_c += (re - s) + v.real();
        } else {
            re_c += (v.real() - s) + re;
        }
        re = s;
        im += v.imag();
    }
    lock.unlock();
    out.poisson = re + re_c;
    out.imag = im;
    if (!opts.skip_direct) {
        MollifierOptions mo;
        mo.enumeration.threads = opts.threads;
        const MollifiedValue direct = mollified_rest(body, t, eps, mo);
        out.direct = direct.value;
        out.direct_error = direct.error;
    }
    return out;
}

}  // namespace latdisc
