#include "latdisc/rotations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "latdisc/discrepancy.hpp"
#include "latdisc/error.hpp"

namespace latdisc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const Vec2& a, double k1, double k2) { return a[0] * k1 + a[1] * k2; }

double gamma_exponent(int m) { return double(m - 2) / (2.0 * double(m - 1)); }

// Points 0 < |k| <= K with |<k, v>| < 1, v a unit vector. Walks the coordinate in which the
// line is steepest; each step has at most three candidates.
std::vector<Lattice2> strip_points(const Vec2& v, double K) {
    std::vector<Lattice2> out;
    const auto kmax = std::int64_t(std::floor(K));
    const double K2 = K * K;
    const bool walk_x = std::abs(v[1]) >= std::abs(v[0]);
    const double a = walk_x ? v[0] : v[1];  // coefficient of the walked coordinate
    const double b = walk_x ? v[1] : v[0];  // |b| >= 1/sqrt 2
    for (std::int64_t i = -kmax; i <= kmax; ++i) {
        const double c = a * double(i);
        const double lo = std::min((-1.0 - c) / b, (1.0 - c) / b);
        const double hi = std::max((-1.0 - c) / b, (1.0 - c) / b);
        for (auto j = std::int64_t(std::floor(lo)) - 1; j <= std::int64_t(std::ceil(hi)) + 1; ++j) {
            const Lattice2 k = walk_x ? Lattice2{i, j} : Lattice2{j, i};
            if (k[0] == 0 && k[1] == 0) continue;
            if (double(k[0]) * double(k[0]) + double(k[1]) * double(k[1]) > K2) continue;
            if (std::abs(dot(v, double(k[0]), double(k[1]))) < 1.0) out.push_back(k);
        }
    }
    std::sort(out.begin(), out.end(), [](const Lattice2& p, const Lattice2& q) {
        const auto np = p[0] * p[0] + p[1] * p[1];
        const auto nq = q[0] * q[0] + q[1] * q[1];
        return np != nq ? np < nq : p < q;
    });
    return out;
}

std::vector<FlatPoint> require_flats(const Body& body) {
    if (!body.planar()) throw PreconditionError("rotations need a planar body");
    auto flats = flat_points(body);
    if (flats.empty()) throw PreconditionError("no flat points");
    return flats;
}

// Largest relative discrepancy |N(t) / (vol t^2) - 1| over [R, R+h]. Between jumps the value is
// monotone, so it suffices to look at both sides of every jump and at the window ends.
double max_abs_delta(const Body& body, double R, double h, const EnumerationOptions& opts) {
    const auto ev = gauge_events(body, R, R + h, opts);
    const double vol = body.volume();
    auto rel = [&](double N, double t) { return std::abs(N / (vol * t * t) - 1.0); };
    double n = double(ev.base_count);
    double best = rel(n, R);
    for (const auto& e : ev.events) {
        best = std::max(best, rel(n, e.rho));
        n += double(e.multiplicity);
        best = std::max(best, rel(n, e.rho));
    }
    return std::max(best, rel(n, R + h));
}

RotationReport scan_one(const Body& body, const std::vector<FlatPoint>& flats, double theta, double K,
                        const RotationScanOptions& opts) {
    RotationReport rep;
    rep.theta = theta;
    const auto cond = diophantine_condition(body, theta, opts.eps, K, opts.rotated_strip);
    for (std::size_t i = 0; i < flats.size(); ++i) {
        FlatRecord rec;
        rec.type = flats[i].type;
        rec.normal = flats[i].normal;
        rec.K = K;
        rec.sup = diophantine_sup(theta, flats[i], opts.eps, K);
        rec.condition = cond.per_point[i];
        rep.M_hat = std::max(rep.M_hat, rec.sup.value);
        rep.type = std::max(rep.type, rec.type);
        rep.flats.push_back(std::move(rec));
    }
    rep.condition = cond.value;
    if (opts.R > 0.0) {
        const Body rotated = Body::rotated(body, theta);
        const WindowRule rule{WindowKind::short_log, 0.0};
        DiscrepancySummary s;
        s.R = opts.R;
        s.h = rule.length(opts.R);
        EnumerationOptions eo = opts.enumeration;
        eo.threads = 1;
        s.G = window_msd(rotated, s.R, s.h, true, eo).G;
        s.G_scaled = std::pow(s.R, 1.5) * s.G;
        s.max_abs_delta = max_abs_delta(rotated, s.R, s.h, eo);
        rep.discrepancy = s;
    }
    return rep;
}

}  // namespace

double golden_angle() { return std::atan((std::sqrt(5.0) - 1.0) / 2.0); }

double theta_weight(const FlatPoint& flat, const Vec2& xi) {
    const double nx = flat.normal[0] * xi[0] + flat.normal[1] * xi[1];
    if (nx == 0.0) throw PreconditionError("theta_weight: <n_P, xi> = 0");
    const double vx = flat.tangent[0] * xi[0] + flat.tangent[1] * xi[1];
    if (vx == 0.0) return kInf;
    return std::pow(std::abs(vx / nx), -gamma_exponent(flat.type));
}

FlatPoint pulled_back(const FlatPoint& flat, double theta) {
    FlatPoint out = flat;
    out.point = rotate_vec(flat.point, -theta);
    out.normal = rotate_vec(flat.normal, -theta);
    out.tangent = rotate_vec(flat.tangent, -theta);
    return out;
}

std::vector<Lattice2> near_normal_set(double theta, const FlatPoint& flat, double K) {
    if (!(K >= 1.0)) throw PreconditionError("near_normal_set: K must be >= 1");
    return strip_points(rotate_vec(flat.tangent, -theta), K);
}

DiophantineSup diophantine_sup(double theta, const FlatPoint& flat, double eps, double K) {
    if (!(eps > 0.0 && eps <= 0.5)) throw PreconditionError("diophantine_sup: eps must be in (0, 1/2]");
    const FlatPoint f = pulled_back(flat, theta);
    const auto pts = near_normal_set(theta, flat, K);
    DiophantineSup out;
    out.points = pts.size();
    const double g = gamma_exponent(flat.type);
    const int top = int(std::floor(std::log2(K)));
    out.profile.resize(std::size_t(top + 1));
    for (int j = 0; j <= top; ++j) out.profile[std::size_t(j)].octave = j;
    for (const auto& k : pts) {
        const double k1 = double(k[0]), k2 = double(k[1]);
        const double norm = std::hypot(k1, k2);
        const double vk = dot(f.tangent, k1, k2);
        const double nk = dot(f.normal, k1, k2);
        double val;
        if (std::abs(vk) <= 1e-12 * norm)
            val = kInf;
        else
            val = std::pow(norm, -1.0 + eps) * std::pow(std::abs(vk / nk), -g);
        const int j = std::clamp(int(std::floor(std::log2(norm))), 0, top);
        auto& o = out.profile[std::size_t(j)];
        o.local = std::max(o.local, val);
        out.value = std::max(out.value, val);
    }
    double run = 0.0;
    for (auto& o : out.profile) {
        run = std::max(run, o.local);
        o.cumulative = run;
    }
    return out;
}

ConditionStat diophantine_condition(const Body& body, double theta, double eps, double K, bool rotated_strip) {
    if (!(K >= 1.0)) throw PreconditionError("diophantine_condition: K must be >= 1");
    const auto flats = require_flats(body);
    ConditionStat out;
    for (const auto& flat : flats) {
        if (flat.type <= 2) throw PreconditionError("diophantine_condition: flat point type must exceed 2");
        const Vec2 v = rotate_vec(flat.tangent, -theta);
        const auto pts = strip_points(rotated_strip ? v : flat.tangent, K);
        const double p = double(flat.type) / double(flat.type - 2) - eps;
        double best = 0.0;
        for (const auto& k : pts) {
            const double k1 = double(k[0]), k2 = double(k[1]);
            best = std::max(best, std::pow(std::hypot(k1, k2), p) * std::abs(dot(v, k1, k2)));
        }
        out.per_point.push_back(best);
        out.value = std::max(out.value, best);
    }
    return out;
}

std::vector<RotationReport> rotation_scan(const Body& body, std::vector<double> angles, double K,
                                          const RotationScanOptions& opts) {
    const auto flats = require_flats(body);
    if (angles.empty()) throw PreconditionError("rotation_scan: empty angle grid");
    if (!(K >= 1.0)) throw PreconditionError("rotation_scan: K must be >= 1");
    if (!(opts.eps > 0.0 && opts.eps <= 0.5)) throw PreconditionError("rotation_scan: eps must be in (0, 1/2]");
    std::sort(angles.begin(), angles.end());
    std::vector<RotationReport> out(angles.size());
    std::vector<std::exception_ptr> errors(angles.size());
    const unsigned nthreads = std::max(1u, std::min<unsigned>(opts.enumeration.threads, unsigned(angles.size())));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < angles.size(); i += nthreads) {
            try {
                out[i] = scan_one(body, flats, angles[i], K, opts);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (nthreads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nthreads; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace latdisc
