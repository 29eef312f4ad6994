#include "latdisc/body.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/tools/minima.hpp>

#include "latdisc/error.hpp"
#include "latdisc/fit.hpp"

namespace latdisc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class T>
T ipow(const T& x, int n) {
    T r = x;
    for (int i = 1; i < n; ++i) r = r * x;
    return r;
}

double dual_exponent(int m) { return static_cast<double>(m) / (m - 1); }

// ||(u, v)||_p with overflow-safe scaling.
double lp_norm2(double u, double v, double p) {
    u = std::abs(u);
    v = std::abs(v);
    const double big = std::max(u, v);
    if (big == 0.0) return 0.0;
    return big * std::pow(std::pow(u / big, p) + std::pow(v / big, p), 1.0 / p);
}

// Gradient of (u, v) -> ||(u, v)||_p.
Vec2 lp_norm2_grad(double u, double v, double p) {
    const double big = std::max(std::abs(u), std::abs(v));
    const double su = u / big;
    const double sv = v / big;
    const double n = lp_norm2(su, sv, p);
    const double denom = std::pow(n, p - 1.0);
    auto comp = [&](double w) {
        return std::copysign(std::pow(std::abs(w), p - 1.0), w) / denom;
    };
    return {comp(su), comp(sv)};
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

void require_dim(const Body& body, std::span<const double> x, const char* what) {
    if (static_cast<int>(x.size()) != body.dim()) {
        throw PreconditionError(std::string(what) + ": point dimension " + std::to_string(x.size()) +
                                " does not match body dimension " + std::to_string(body.dim()));
    }
}

void require_planar(const Body& body, const char* what) {
    if (!body.planar()) throw PreconditionError(std::string(what) + " requires a planar body");
}

double normalize_angle(double theta) {
    double a = std::fmod(theta, kTwoPi);
    if (a < 0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

// Counterclockwise boundary parametrization, generic in the scalar type so that
// autodiff jets can be pushed through it.
template <class T>
std::array<T, 2> param(const Body& body, const T& t) {
    using std::cos;
    using std::pow;
    using std::sin;
    return std::visit(
        [&](const auto& s) -> std::array<T, 2> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return {s.radius * cos(t), s.radius * sin(t)};
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                return {s.semiaxes[0] * cos(t), s.semiaxes[1] * sin(t)};
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                const T c = cos(t);
                const T sn = sin(t);
                const T r = pow(ipow(c, s.exponent) + ipow(sn, s.exponent), -1.0 / s.exponent);
                return {s.a * c * r, s.b * sn * r};
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                // Normal map of the primal superellipse: its boundary point
                // (a X, b Y) has polar partner (X^{m-1}/a, Y^{m-1}/b).
                const T c = cos(t);
                const T sn = sin(t);
                const T r = pow(ipow(c, s.exponent) + ipow(sn, s.exponent), -1.0 / s.exponent);
                const T X = c * r;
                const T Y = sn * r;
                return {ipow(X, s.exponent - 1) / s.a, ipow(Y, s.exponent - 1) / s.b};
            } else {
                const auto p = param(*s.inner, t);
                const double ca = std::cos(s.angle);
                const double sa = std::sin(s.angle);
                return {ca * p[0] - sa * p[1], sa * p[0] + ca * p[1]};
            }
        },
        body.shape());
}

std::string fmt_num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_num(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw PreconditionError("body field '" + key + "': cannot parse number '" + text + "'");
    }
    return v;
}

int parse_int(const std::string& key, const std::string& text) {
    const double v = parse_num(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e6) {
        throw PreconditionError("body field '" + key + "': expected an integer, got '" + text + "'");
    }
    return static_cast<int>(v);
}

}  // namespace

//---------------------------------------------------------------------------//
// Construction
//---------------------------------------------------------------------------//

Body Body::ball(int dim, double radius) {
    if (dim < 2) throw PreconditionError("ball: dimension must be >= 2");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw PreconditionError("ball: radius must be > 0");
    return Body(Ball{dim, radius});
}

Body Body::ellipsoid(std::vector<double> semiaxes) {
    if (semiaxes.size() < 2) throw PreconditionError("ellipsoid: need at least 2 semiaxes");
    for (double a : semiaxes) {
        if (!(a > 0.0) || !std::isfinite(a)) throw PreconditionError("ellipsoid: semiaxes must be > 0");
    }
    return Body(Ellipsoid{std::move(semiaxes)});
}

Body Body::superellipse(int exponent, double a, double b) {
    if (exponent < 2 || exponent % 2 != 0) {
        throw PreconditionError("superellipse: exponent m must be even and >= 2");
    }
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw PreconditionError("superellipse: semiaxes must be > 0");
    }
    return Body(Superellipse2D{exponent, a, b});
}

Body Body::polar_superellipse(int exponent, double a, double b) {
    const Body primal = superellipse(exponent, a, b);
    (void)primal;
    return Body(PolarSuperellipse2D{exponent, a, b});
}

Body Body::rotated(const Body& inner, double angle) {
    require_planar(inner, "rotate");
    if (!std::isfinite(angle)) throw PreconditionError("rotate: angle must be finite");
    if (const auto* r = std::get_if<Rotated2D>(&inner.shape())) {
        return Body(Rotated2D{r->inner, normalize_angle(r->angle + angle)});
    }
    return Body(Rotated2D{std::make_shared<const Body>(inner), normalize_angle(angle)});
}

int Body::dim() const {
    return std::visit(
        [](const auto& s) -> int {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return s.dim;
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                return static_cast<int>(s.semiaxes.size());
            } else {
                return 2;
            }
        },
        shape_);
}

double Body::volume() const {
    auto unit_ball = [](int d) {
        return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    };
    auto lp_area = [](double p) {
        return 4.0 * std::tgamma(1.0 + 1.0 / p) * std::tgamma(1.0 + 1.0 / p) / std::tgamma(1.0 + 2.0 / p);
    };
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return unit_ball(s.dim) * std::pow(s.radius, s.dim);
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                double v = unit_ball(static_cast<int>(s.semiaxes.size()));
                for (double a : s.semiaxes) v *= a;
                return v;
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                return lp_area(s.exponent) * s.a * s.b;
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                return lp_area(dual_exponent(s.exponent)) / (s.a * s.b);
            } else {
                return s.inner->volume();
            }
        },
        shape_);
}

double Body::inradius() const {
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return s.radius;
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                return *std::min_element(s.semiaxes.begin(), s.semiaxes.end());
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                return std::min(s.a, s.b);
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                // min over unit directions of the support function.
                auto h = [&](double phi) {
                    return lp_norm2(std::cos(phi) / s.a, std::sin(phi) / s.b, s.exponent);
                };
                const int n = 2048;
                double best = h(0.0);
                int arg = 0;
                for (int i = 1; i < n; ++i) {
                    const double v = h(kTwoPi * i / n);
                    if (v < best) {
                        best = v;
                        arg = i;
                    }
                }
                const double lo = kTwoPi * (arg - 1) / n;
                const double hi = kTwoPi * (arg + 1) / n;
                auto r = boost::math::tools::brent_find_minima(h, lo, hi, 40);
                return std::min(best, r.second);
            } else {
                return s.inner->inradius();
            }
        },
        shape_);
}

std::string Body::descriptor() const {
    return std::visit(
        [&](const auto& s) -> std::string {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return "ball:d=" + std::to_string(s.dim) + ",r=" + fmt_num(s.radius);
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                const auto& a = s.semiaxes;
                if (a.size() == 2) return "ellipsoid:a=" + fmt_num(a[0]) + ",b=" + fmt_num(a[1]);
                if (a.size() == 3) {
                    return "ellipsoid:a=" + fmt_num(a[0]) + ",b=" + fmt_num(a[1]) + ",c=" + fmt_num(a[2]);
                }
                std::string out = "ellipsoid:axes=";
                for (std::size_t i = 0; i < a.size(); ++i) {
                    if (i) out += ';';
                    out += fmt_num(a[i]);
                }
                return out;
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                return "superellipse:m=" + std::to_string(s.exponent) + ",a=" + fmt_num(s.a) + ",b=" + fmt_num(s.b);
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                return "polar:superellipse:m=" + std::to_string(s.exponent) + ",a=" + fmt_num(s.a) +
                       ",b=" + fmt_num(s.b);
            } else {
                return s.inner->descriptor() + ",theta=" + fmt_num(s.angle);
            }
        },
        shape_);
}

//---------------------------------------------------------------------------//
// Parsing
//---------------------------------------------------------------------------//

Body parse_body(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.rfind("polar:", 0) == 0) return polar(parse_body(s.substr(6)));

    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        throw PreconditionError("body '" + s + "': expected '<kind>:key=value,...'");
    }
    const std::string kind = s.substr(0, colon);
    std::map<std::string, std::string> fields;
    std::stringstream ss(s.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw PreconditionError("body '" + s + "': malformed field '" + item + "'");
        }
        const std::string key = item.substr(0, eq);
        if (fields.count(key)) throw PreconditionError("body '" + s + "': duplicate field '" + key + "'");
        fields[key] = item.substr(eq + 1);
    }

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = fields.find(key);
        if (it == fields.end()) return std::nullopt;
        std::string v = it->second;
        fields.erase(it);
        return v;
    };
    auto need = [&](const std::string& key) -> std::string {
        auto v = take(key);
        if (!v) throw PreconditionError("body '" + s + "': missing field '" + key + "'");
        return *v;
    };

    const auto theta_text = take("theta");
    std::optional<Body> body;
    if (kind == "ball") {
        const int d = parse_int("d", need("d"));
        const auto r = take("r");
        body = Body::ball(d, r ? parse_num("r", *r) : 1.0);
    } else if (kind == "ellipsoid") {
        std::vector<double> axes;
        if (auto list = take("axes")) {
            std::stringstream ls(*list);
            std::string tok;
            while (std::getline(ls, tok, ';')) axes.push_back(parse_num("axes", tok));
        } else {
            for (const char* key : {"a", "b", "c"}) {
                if (auto v = take(key)) axes.push_back(parse_num(key, *v));
            }
        }
        body = Body::ellipsoid(std::move(axes));
    } else if (kind == "superellipse") {
        const int m = parse_int("m", need("m"));
        const auto a = take("a");
        const auto b = take("b");
        body = Body::superellipse(m, a ? parse_num("a", *a) : 1.0, b ? parse_num("b", *b) : 1.0);
    } else {
        throw PreconditionError("body '" + s + "': unknown kind '" + kind + "'");
    }
    if (!fields.empty()) {
        throw PreconditionError("body '" + s + "': unknown field '" + fields.begin()->first + "'");
    }
    if (theta_text) {
        const double theta = parse_num("theta", *theta_text);
        if (!body->planar()) throw PreconditionError("body '" + s + "': theta requires a planar body");
        return Body::rotated(*body, theta);
    }
    return *body;
}

//---------------------------------------------------------------------------//
// Gauge, support, polar
//---------------------------------------------------------------------------//

Vec2 rotate_vec(const Vec2& v, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

double gauge(const Body& body, std::span<const double> x) {
    require_dim(body, x, "gauge");
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return norm(x) / s.radius;
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                double acc = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double u = x[i] / s.semiaxes[i];
                    acc += u * u;
                }
                return std::sqrt(acc);
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                const double u = std::abs(x[0]) / s.a;
                const double v = std::abs(x[1]) / s.b;
                const double big = std::max(u, v);
                if (big == 0.0) return 0.0;
                const double su = u / big;
                const double sv = v / big;
                return big * std::pow(ipow(su, s.exponent) + ipow(sv, s.exponent), 1.0 / s.exponent);
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                return lp_norm2(s.a * x[0], s.b * x[1], dual_exponent(s.exponent));
            } else {
                const Vec2 y = rotate_vec({x[0], x[1]}, -s.angle);
                return gauge(*s.inner, y);
            }
        },
        body.shape());
}

double support(const Body& body, std::span<const double> xi) {
    require_dim(body, xi, "support");
    if (norm(xi) == 0.0) throw PreconditionError("support: direction must be nonzero");
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return s.radius * norm(xi);
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                double acc = 0.0;
                for (std::size_t i = 0; i < xi.size(); ++i) {
                    const double u = xi[i] * s.semiaxes[i];
                    acc += u * u;
                }
                return std::sqrt(acc);
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                return lp_norm2(s.a * xi[0], s.b * xi[1], dual_exponent(s.exponent));
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                return lp_norm2(xi[0] / s.a, xi[1] / s.b, s.exponent);
            } else {
                const Vec2 y = rotate_vec({xi[0], xi[1]}, -s.angle);
                return support(*s.inner, y);
            }
        },
        body.shape());
}

Body polar(const Body& body) {
    return std::visit(
        [&](const auto& s) -> Body {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                return Body::ball(s.dim, 1.0 / s.radius);
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                std::vector<double> inv;
                for (double a : s.semiaxes) inv.push_back(1.0 / a);
                return Body::ellipsoid(std::move(inv));
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                return Body::polar_superellipse(s.exponent, s.a, s.b);
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                return Body::superellipse(s.exponent, s.a, s.b);
            } else {
                return Body::rotated(polar(*s.inner), s.angle);
            }
        },
        body.shape());
}

Point normal_point(const Body& body, std::span<const double> xi) {
    require_dim(body, xi, "normal_point");
    const double len = norm(xi);
    if (len == 0.0) throw PreconditionError("normal_point: direction must be nonzero");
    return std::visit(
        [&](const auto& s) -> Point {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Ball>) {
                Point p(xi.begin(), xi.end());
                for (double& v : p) v *= s.radius / len;
                return p;
            } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                const double h = support(body, xi);
                Point p(xi.size());
                for (std::size_t i = 0; i < xi.size(); ++i) p[i] = s.semiaxes[i] * s.semiaxes[i] * xi[i] / h;
                return p;
            } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                const Vec2 g = lp_norm2_grad(s.a * xi[0], s.b * xi[1], dual_exponent(s.exponent));
                return {s.a * g[0], s.b * g[1]};
            } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                const Vec2 g = lp_norm2_grad(xi[0] / s.a, xi[1] / s.b, s.exponent);
                return {g[0] / s.a, g[1] / s.b};
            } else {
                const Vec2 y = rotate_vec({xi[0], xi[1]}, -s.angle);
                const Point p = normal_point(*s.inner, y);
                const Vec2 q = rotate_vec({p[0], p[1]}, s.angle);
                return {q[0], q[1]};
            }
        },
        body.shape());
}

Body rotate(const Body& body, double theta) { return Body::rotated(body, theta); }

//---------------------------------------------------------------------------//
// Boundary parametrization and curvature
//---------------------------------------------------------------------------//

Vec2 boundary_point(const Body& body, double t) {
    require_planar(body, "boundary_point");
    const auto p = param(body, t);
    return {p[0], p[1]};
}

std::array<Vec2, 5> boundary_jet(const Body& body, double t) {
    require_planar(body, "boundary_jet");
    using boost::math::differentiation::make_fvar;
    const auto x = make_fvar<double, 4>(t);
    const auto p = param(body, x);
    std::array<Vec2, 5> out{};
    for (int k = 0; k <= 4; ++k) {
        out[k] = {p[0].derivative(k), p[1].derivative(k)};
    }
    return out;
}

Vec2 boundary_velocity(const Body& body, double t) {
    require_planar(body, "boundary_velocity");
    using boost::math::differentiation::make_fvar;
    const auto x = make_fvar<double, 1>(t);
    const auto p = param(body, x);
    return {p[0].derivative(1), p[1].derivative(1)};
}

std::array<Vec2, 2> boundary_point_velocity(const Body& body, double t) {
    require_planar(body, "boundary_point_velocity");
    using boost::math::differentiation::make_fvar;
    const auto x = make_fvar<double, 1>(t);
    const auto p = param(body, x);
    return {Vec2{p[0].derivative(0), p[1].derivative(0)}, Vec2{p[0].derivative(1), p[1].derivative(1)}};
}

Vec2 outward_normal(const Body& body, double t) {
    const Vec2 v = boundary_velocity(body, t);
    const double len = std::hypot(v[0], v[1]);
    if (len == 0.0) {
        // Singular parametrization point: fall back to a nearby regular one.
        return outward_normal(body, t + 1e-7);
    }
    return {v[1] / len, -v[0] / len};
}

double curvature(const Body& body, double t) {
    require_planar(body, "curvature");
    using boost::math::differentiation::make_fvar;
    const auto x = make_fvar<double, 2>(t);
    const auto p = param(body, x);
    const double x1 = p[0].derivative(1);
    const double y1 = p[1].derivative(1);
    const double x2 = p[0].derivative(2);
    const double y2 = p[1].derivative(2);
    const double speed = std::hypot(x1, y1);
    if (speed == 0.0) return std::numeric_limits<double>::infinity();
    return (x1 * y2 - y1 * x2) / (speed * speed * speed);
}

double gaussian_curvature(const Body& body, std::span<const double> point) {
    require_dim(body, point, "gaussian_curvature");
    if (const auto* b = std::get_if<Ball>(&body.shape())) {
        return std::pow(b->radius, -(b->dim - 1));
    }
    if (const auto* e = std::get_if<Ellipsoid>(&body.shape())) {
        const auto& a = e->semiaxes;
        const int d = static_cast<int>(a.size());
        double prod = 1.0;
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
            prod *= a[i] * a[i];
            acc += point[i] * point[i] / (a[i] * a[i] * a[i] * a[i]);
        }
        return 1.0 / (prod * std::pow(acc, (d + 1) / 2.0));
    }
    if (body.planar()) {
        // Locate the parameter of the point by its direction from the origin.
        const double g = gauge(body, point);
        const double phi = std::atan2(point[1], point[0]);
        auto dist = [&](double t) {
            const Vec2 q = boundary_point(body, t);
            return std::hypot(q[0] - point[0] / g, q[1] - point[1] / g);
        };
        double best_t = 0.0;
        double best = dist(0.0);
        for (int i = 1; i < 4096; ++i) {
            const double t = kTwoPi * i / 4096;
            const double v = dist(t);
            if (v < best) {
                best = v;
                best_t = t;
            }
        }
        (void)phi;
        auto r = boost::math::tools::brent_find_minima(dist, best_t - kTwoPi / 4096, best_t + kTwoPi / 4096, 50);
        return curvature(body, r.first);
    }
    throw PreconditionError("gaussian_curvature: unsupported body");
}

//---------------------------------------------------------------------------//
// Flat points
//---------------------------------------------------------------------------//

namespace {

const Superellipse2D* underlying_superellipse(const Body& body) {
    if (const auto* s = std::get_if<Superellipse2D>(&body.shape())) return s;
    if (const auto* r = std::get_if<Rotated2D>(&body.shape())) return underlying_superellipse(*r->inner);
    return nullptr;
}

double abs_curvature(const Body& body, double t) {
    const double k = curvature(body, t);
    return std::isfinite(k) ? std::abs(k) : std::numeric_limits<double>::infinity();
}

// d kappa / dt from the 3-jet.
double curvature_derivative(const Body& body, double t) {
    using boost::math::differentiation::make_fvar;
    const auto x = make_fvar<double, 3>(t);
    const auto p = param(body, x);
    const double x1 = p[0].derivative(1), y1 = p[1].derivative(1);
    const double x2 = p[0].derivative(2), y2 = p[1].derivative(2);
    const double x3 = p[0].derivative(3), y3 = p[1].derivative(3);
    const double s2 = x1 * x1 + y1 * y1;
    const double s = std::sqrt(s2);
    return (x1 * y3 - y1 * x3) / (s2 * s) - 3.0 * (x1 * y2 - y1 * x2) * (x1 * x2 + y1 * y2) / (s2 * s2 * s);
}

// The curvature minimum is very flat; bisect on the sign change of kappa' instead.
double refine_flat(const Body& body, double t, double half_width) {
    double a = t - half_width;
    double b = t + half_width;
    double fa = curvature_derivative(body, a);
    const double fb = curvature_derivative(body, b);
    if (!(fa < 0.0 && fb > 0.0)) return t;
    for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = curvature_derivative(body, mid);
        if (fm == 0.0) return mid;
        if (fm < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

int estimate_type(const Body& body, double t0) {
    const Vec2 v = boundary_velocity(body, t0);
    const double speed = std::hypot(v[0], v[1]);
    std::vector<double> xs;
    std::vector<double> ys;
    const int samples = 9;
    for (int i = 0; i < samples; ++i) {
        const double s = std::pow(10.0, -4.0 + 2.0 * i / (samples - 1));
        const double dt = s / speed;
        const double k = 0.5 * (abs_curvature(body, t0 + dt) + abs_curvature(body, t0 - dt));
        // Below ~1e-13 the curvature is rounding noise.
        if (k > 1e-13 && std::isfinite(k)) {
            xs.push_back(std::log(s));
            ys.push_back(std::log(k));
        }
    }
    if (xs.size() < 3) throw ConvergenceError("flat_points: too few resolvable curvature samples for type fit");
    const auto fit = ols(xs, ys);
    const double m_est = fit.slope + 2.0;
    const double m_even = 2.0 * std::round(m_est / 2.0);
    if (std::abs(m_est - m_even) > 0.1 || m_even < 4) {
        throw ConvergenceError("flat_points: type fit did not stabilize (estimate " + std::to_string(m_est) + ")");
    }
    return static_cast<int>(m_even);
}

}  // namespace

std::vector<FlatPoint> flat_points(const Body& body) {
    if (std::holds_alternative<Ball>(body.shape()) || std::holds_alternative<Ellipsoid>(body.shape())) {
        return {};
    }
    require_planar(body, "flat_points");

    const int n = 2048;
    std::vector<double> kappa(n);
    for (int i = 0; i < n; ++i) kappa[i] = abs_curvature(body, kTwoPi * i / n);

    std::vector<double> minima;
    for (int i = 0; i < n; ++i) {
        const double prev = kappa[(i + n - 1) % n];
        const double next = kappa[(i + 1) % n];
        if (!(kappa[i] <= prev && kappa[i] <= next) || kappa[i] > 1e-2) continue;
        const double lo = kTwoPi * (i - 1) / n;
        const double hi = kTwoPi * (i + 1) / n;
        auto r = boost::math::tools::brent_find_minima([&](double t) { return abs_curvature(body, t); }, lo, hi, 52);
        if (r.second < kFlatTolerance) minima.push_back(normalize_angle(refine_flat(body, r.first, kTwoPi / n)));
    }
    std::sort(minima.begin(), minima.end());
    std::vector<double> unique;
    for (double t : minima) {
        if (!unique.empty() && std::abs(t - unique.back()) < 1e-5) continue;
        unique.push_back(t);
    }
    if (unique.size() > 1 && kTwoPi - unique.back() + unique.front() < 1e-5) unique.pop_back();

    // Superellipse flat points sit at the axis parameters; snap the detected ones there.
    const auto* se_shape = underlying_superellipse(body);
    if (se_shape && se_shape->exponent >= 4) {
        const double quarter = 0.25 * kTwoPi;
        for (double& t : unique) {
            const double snapped = quarter * std::round(t / quarter);
            if (std::abs(t - snapped) < 1e-4) t = normalize_angle(snapped);
        }
    }

    std::vector<FlatPoint> out;
    for (double t : unique) {
        FlatPoint fp;
        fp.parameter = t;
        fp.point = boundary_point(body, t);
        fp.normal = outward_normal(body, t);
        const Vec2 v = boundary_velocity(body, t);
        const double len = std::hypot(v[0], v[1]);
        fp.tangent = {v[0] / len, v[1] / len};
        fp.type = estimate_type(body, t);
        out.push_back(fp);
    }

    if (const auto* se = underlying_superellipse(body); se && se->exponent >= 4) {
        if (out.size() != 4) {
            throw ConvergenceError("flat_points: expected 4 flat points on a superellipse, found " +
                                   std::to_string(out.size()));
        }
        for (const auto& fp : out) {
            if (fp.type != se->exponent) {
                throw ConvergenceError("flat_points: estimated type " + std::to_string(fp.type) +
                                       " disagrees with exponent " + std::to_string(se->exponent));
            }
        }
    }
    return out;
}

}  // namespace latdisc
