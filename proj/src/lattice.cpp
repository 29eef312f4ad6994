#include "latdisc/lattice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <thread>

#include <boost/multiprecision/cpp_int.hpp>

#include "latdisc/error.hpp"

namespace latdisc {

namespace {

constexpr int kMaxDim = 8;
using Prefix = std::array<std::int64_t, kMaxDim>;

// p/q with q <= 1e6 and p/q == a exactly in double arithmetic.
std::optional<std::pair<std::int64_t, std::int64_t>> small_rational(double a) {
    double x = a;
    std::int64_t h0 = 1, h1 = 0, k0 = 0, k1 = 1;
    for (int it = 0; it < 40; ++it) {
        const double fl = std::floor(x);
        if (fl > 1e12) break;
        const auto c = static_cast<std::int64_t>(fl);
        const std::int64_t h2 = c * h0 + h1;
        const std::int64_t k2 = c * k0 + k1;
        if (k2 > 1000000 || h2 > 1000000) break;
        h1 = h0;
        h0 = h2;
        k1 = k0;
        k0 = k2;
        if (static_cast<double>(h0) / static_cast<double>(k0) == a) return std::make_pair(h0, k0);
        const double frac = x - fl;
        if (frac == 0.0) break;
        x = 1.0 / frac;
    }
    return std::nullopt;
}

std::int64_t isqrt(std::int64_t n) {
    if (n <= 0) return 0;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
    while (r > 0 && static_cast<__int128>(r) * r > n) --r;
    while (static_cast<__int128>(r + 1) * (r + 1) <= n) ++r;
    return r;
}

struct Interval {
    std::int64_t lo = 1;
    std::int64_t hi = 0;
    bool empty() const { return lo > hi; }
};

// Row solver for one dilation threshold t. A "row" fixes coordinates 1..d-1 and
// returns the integer range of coordinate 0 with rho(k) <= t.
class RowSolver {
  public:
    RowSolver(const Body& body, double t, const std::optional<QuadraticKeys>& keys)
        : body_(body), t_(t), dim_(body.dim()), keys_(keys) {
        if (keys_) {
            key_threshold_ = floor_scaled_square(t, keys_->scale);
        } else {
            band_ = tie_band(t);
            limit_ = t + band_;
        }
    }

    bool exact() const { return keys_.has_value(); }

    // Row interval for coordinates prefix[1..d-1]; `ties` accumulates tie-band hits.
    Interval row(const Prefix& prefix, std::uint64_t& ties) const {
        if (keys_) {
            __int128 rest = 0;
            for (int i = 1; i < dim_; ++i) {
                rest += static_cast<__int128>(keys_->weights[i]) * prefix[i] * prefix[i];
            }
            if (rest > key_threshold_) return {};
            const auto room = static_cast<std::int64_t>(key_threshold_ - rest);
            const std::int64_t x = isqrt(room / keys_->weights[0]);
            return {-x, x};
        }
        if (const auto* r = std::get_if<Rotated2D>(&body_.shape())) {
            (void)r;
            return rotated_row(prefix, ties);
        }
        return symmetric_row(prefix, ties);
    }

    double gauge_at(const Prefix& prefix, std::int64_t x) const {
        std::array<double, kMaxDim> p{};
        p[0] = static_cast<double>(x);
        for (int i = 1; i < dim_; ++i) p[i] = static_cast<double>(prefix[i]);
        return gauge(body_, std::span<const double>(p.data(), dim_));
    }

    std::int64_t key_at(const Prefix& prefix, std::int64_t x) const {
        __int128 key = static_cast<__int128>(keys_->weights[0]) * x * x;
        for (int i = 1; i < dim_; ++i) key += static_cast<__int128>(keys_->weights[i]) * prefix[i] * prefix[i];
        return static_cast<std::int64_t>(key);
    }

    double band() const { return band_; }
    double threshold() const { return t_; }
    std::int64_t key_threshold() const { return key_threshold_; }

  private:
    bool inside(const Prefix& prefix, std::int64_t x) const { return gauge_at(prefix, x) <= limit_; }

    void count_tie(const Prefix& prefix, std::int64_t x, std::uint64_t& ties) const {
        if (gauge_at(prefix, x) >= t_ - band_) ++ties;
    }

    // Real half-width of the row for axis-symmetric bodies; negative if empty.
    double half_width(const Prefix& prefix) const {
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Ball>) {
                    double rest = 0.0;
                    for (int i = 1; i < dim_; ++i) rest += static_cast<double>(prefix[i]) * prefix[i];
                    const double room = s.radius * s.radius * t_ * t_ - rest;
                    return room < 0 ? -1.0 : std::sqrt(room);
                } else if constexpr (std::is_same_v<S, Ellipsoid>) {
                    double rest = 0.0;
                    for (int i = 1; i < dim_; ++i) {
                        const double u = prefix[i] / s.semiaxes[i];
                        rest += u * u;
                    }
                    const double room = t_ * t_ - rest;
                    return room < 0 ? -1.0 : s.semiaxes[0] * std::sqrt(room);
                } else if constexpr (std::is_same_v<S, Superellipse2D>) {
                    const double m = s.exponent;
                    const double room = std::pow(t_, m) - std::pow(std::abs(prefix[1]) / s.b, m);
                    return room < 0 ? -1.0 : s.a * std::pow(room, 1.0 / m);
                } else if constexpr (std::is_same_v<S, PolarSuperellipse2D>) {
                    const double q = static_cast<double>(s.exponent) / (s.exponent - 1);
                    const double room = std::pow(t_, q) - std::pow(std::abs(s.b * prefix[1]), q);
                    return room < 0 ? -1.0 : std::pow(room, 1.0 / q) / s.a;
                } else {
                    return -1.0;
                }
            },
            body_.shape());
    }

    Interval symmetric_row(const Prefix& prefix, std::uint64_t& ties) const {
        const double w = half_width(prefix);
        std::int64_t c = w < 0 ? 0 : static_cast<std::int64_t>(std::floor(w));
        while (inside(prefix, c + 1)) ++c;
        while (c >= 0 && !inside(prefix, c)) --c;
        if (c < 0) return {};
        count_tie(prefix, c, ties);
        if (c > 0) count_tie(prefix, -c, ties);
        return {-c, c};
    }

    Interval rotated_row(const Prefix& prefix, std::uint64_t& ties) const {
        const std::array<double, 2> e1{1.0, 0.0};
        const double extent = t_ * support(body_, e1) + 2.0;
        auto g = [&](double x) {
            const std::array<double, 2> p{x, static_cast<double>(prefix[1])};
            return gauge(body_, p);
        };
        // Golden-section minimum of the convex restriction.
        double a = -extent;
        double b = extent;
        const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - ratio * (b - a);
        double x2 = a + ratio * (b - a);
        double f1 = g(x1);
        double f2 = g(x2);
        for (int it = 0; it < 90 && b - a > 1e-12 * extent; ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = g(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = g(x2);
            }
        }
        const double xmin = 0.5 * (a + b);
        if (g(xmin) > limit_) return {};
        auto root = [&](double inner, double outer) {
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (inner + outer);
                if (g(mid) <= t_) {
                    inner = mid;
                } else {
                    outer = mid;
                }
            }
            return inner;
        };
        const double xl = root(xmin, -extent);
        const double xr = root(xmin, extent);

        std::int64_t r = static_cast<std::int64_t>(std::floor(xr));
        std::int64_t l = static_cast<std::int64_t>(std::ceil(xl));
        while (inside(prefix, r + 1)) ++r;
        while (inside(prefix, l - 1)) --l;
        while (r >= l && !inside(prefix, r)) --r;
        while (l <= r && !inside(prefix, l)) ++l;
        if (l > r) return {};
        count_tie(prefix, r, ties);
        if (l != r) count_tie(prefix, l, ties);
        return {l, r};
    }

    const Body& body_;
    double t_;
    int dim_;
    const std::optional<QuadraticKeys>& keys_;
    std::int64_t key_threshold_ = 0;
    double band_ = 0.0;
    double limit_ = 0.0;
};

struct Box {
    int dim = 0;
    std::array<std::int64_t, kMaxDim> bound{};

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= 2.0 * bound[i] + 1.0;
        return v;
    }
};

Box bounding_box(const Body& body, double t) {
    Box box;
    box.dim = body.dim();
    if (box.dim > kMaxDim) throw PreconditionError("enumeration supports dimension <= 8");
    for (int i = 0; i < box.dim; ++i) {
        std::vector<double> e(box.dim, 0.0);
        e[i] = 1.0;
        box.bound[i] = static_cast<std::int64_t>(std::ceil(t * support(body, e) * (1.0 + 1e-12))) + 1;
    }
    return box;
}

// Calls fn(prefix) for every prefix (coords 1..d-1) whose last coordinate lies
// in [last_lo, last_hi], iterating coordinates in ascending lexicographic order
// from the last one inward.
template <class Fn>
void for_each_prefix(const Box& box, std::int64_t last_lo, std::int64_t last_hi, Fn&& fn) {
    const int d = box.dim;
    Prefix p{};
    if (d == 1) {
        fn(p);
        return;
    }
    for (std::int64_t last = last_lo; last <= last_hi; ++last) {
        p[d - 1] = last;
        if (d == 2) {
            fn(p);
            continue;
        }
        for (int i = 1; i < d - 1; ++i) p[i] = -box.bound[i];
        while (true) {
            fn(p);
            int i = 1;
            while (i < d - 1 && p[i] == box.bound[i]) {
                p[i] = -box.bound[i];
                ++i;
            }
            if (i == d - 1) break;
            ++p[i];
        }
    }
}

// Splits the last coordinate range into per-thread slabs and runs work(slab_lo,
// slab_hi, thread_index). Results are merged by the caller in slab order.
template <class Work>
void run_slabs(const Box& box, unsigned threads, Work&& work) {
    const std::int64_t lo = -box.bound[box.dim - 1];
    const std::int64_t hi = box.bound[box.dim - 1];
    const std::int64_t span = hi - lo + 1;
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::int64_t>(span, 256))));
    if (n == 1) {
        work(lo, hi, 0u);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) {
        const std::int64_t a = lo + span * i / n;
        const std::int64_t b = lo + span * (i + 1) / n - 1;
        pool.emplace_back([&, a, b, i] { work(a, b, i); });
    }
    for (auto& th : pool) th.join();
}

std::optional<QuadraticKeys> usable_keys(const Body& body, double t) {
    auto keys = exact_keys(body);
    if (!keys) return keys;
    // Keys must fit comfortably into int64.
    const long double max_key = static_cast<long double>(keys->scale) * t * t * 1.01L + 16;
    if (max_key > 4.0e18L) return std::nullopt;
    return keys;
}

void check_threshold(double t, const char* what) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError(std::string(what) + ": dilation must be finite and >= 0");
}

}  // namespace

//---------------------------------------------------------------------------//

std::int64_t floor_scaled_square(double t, std::int64_t scale) {
    using boost::multiprecision::cpp_int;
    if (t == 0.0) return 0;
    int e = 0;
    const double f = std::frexp(std::abs(t), &e);
    const auto mant = static_cast<std::int64_t>(std::ldexp(f, 53));
    const int shift = 2 * (e - 53);
    cpp_int num = cpp_int(mant) * mant * scale;
    if (shift >= 0) {
        num <<= shift;
    } else {
        num >>= -shift;
    }
    return static_cast<std::int64_t>(num);
}

bool scaled_square_is_integer(double t, std::int64_t scale) {
    using boost::multiprecision::cpp_int;
    if (t == 0.0) return true;
    int e = 0;
    const double f = std::frexp(std::abs(t), &e);
    const auto mant = static_cast<std::int64_t>(std::ldexp(f, 53));
    const int shift = 2 * (e - 53);
    if (shift >= 0) return true;
    const cpp_int num = cpp_int(mant) * mant * scale;
    const cpp_int mask = (cpp_int(1) << -shift) - 1;
    return (num & mask) == 0;
}

std::optional<QuadraticKeys> exact_keys(const Body& body) {
    std::vector<double> axes;
    if (const auto* b = std::get_if<Ball>(&body.shape())) {
        axes.assign(b->dim, b->radius);
    } else if (const auto* e = std::get_if<Ellipsoid>(&body.shape())) {
        axes = e->semiaxes;
    } else {
        return std::nullopt;
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> rats;
    std::int64_t scale = 1;
    for (double a : axes) {
        auto r = small_rational(a);
        if (!r) return std::nullopt;
        rats.push_back(*r);
        const std::int64_t p2 = r->first * r->first;
        scale = std::lcm(scale, p2);
        if (scale > (std::int64_t{1} << 40)) return std::nullopt;
    }
    QuadraticKeys keys;
    keys.scale = scale;
    for (auto [p, q] : rats) {
        const __int128 w = static_cast<__int128>(scale / (p * p)) * q * q;
        if (w > (static_cast<__int128>(1) << 40)) return std::nullopt;
        keys.weights.push_back(static_cast<std::int64_t>(w));
    }
    return keys;
}

std::uint64_t GaugeEventList::total_multiplicity() const {
    std::uint64_t s = 0;
    for (const auto& e : events) s += e.multiplicity;
    return s;
}

CountResult count_points_detailed(const Body& body, double t, const EnumerationOptions& opts) {
    check_threshold(t, "count_points");
    const Box box = bounding_box(body, t);
    if (box.volume() > opts.box_budget) {
        throw BudgetError("count_points: bounding box volume " + std::to_string(box.volume()) +
                          " exceeds budget " + std::to_string(opts.box_budget));
    }
    const auto keys = usable_keys(body, t);
    const RowSolver solver(body, t, keys);

    const unsigned nthreads = std::max(1u, opts.threads);
    std::vector<std::uint64_t> counts(nthreads, 0);
    std::vector<std::uint64_t> ties(nthreads, 0);
    run_slabs(box, nthreads, [&](std::int64_t a, std::int64_t b, unsigned idx) {
        std::uint64_t c = 0;
        std::uint64_t tie = 0;
        for_each_prefix(box, a, b, [&](const Prefix& p) {
            const Interval iv = solver.row(p, tie);
            if (!iv.empty()) c += static_cast<std::uint64_t>(iv.hi - iv.lo + 1);
        });
        counts[idx] = c;
        ties[idx] = tie;
    });
    CountResult out;
    out.count = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    out.ties = std::accumulate(ties.begin(), ties.end(), std::uint64_t{0});
    out.exact = keys.has_value();
    return out;
}

std::uint64_t count_points(const Body& body, double t, const EnumerationOptions& opts) {
    return count_points_detailed(body, t, opts).count;
}

GaugeEventList gauge_events(const Body& body, double lo, double hi, const EnumerationOptions& opts) {
    check_threshold(lo, "gauge_events");
    check_threshold(hi, "gauge_events");
    if (!(lo < hi)) throw PreconditionError("gauge_events: need lo < hi");

    const int d = body.dim();
    const double est_points =
        body.volume() * (std::pow(hi, d) - std::pow(lo, d)) * 1.05 + 64.0 * std::pow(hi + 1.0, d - 1);
    const auto keys = usable_keys(body, hi);
    double est_stored = est_points;
    std::int64_t key_lo = 0;
    std::int64_t key_hi = 0;
    bool histogram = false;
    if (keys) {
        key_lo = floor_scaled_square(lo, keys->scale);
        key_hi = floor_scaled_square(hi, keys->scale);
        const auto range = static_cast<double>(key_hi - key_lo);
        est_stored = std::min(est_points, range);
        histogram = range <= 4.0 * est_points + 1024.0 && range < 1.0e9;
    }
    if (est_stored > static_cast<double>(opts.event_budget)) {
        throw BudgetError("gauge_events: estimated " + std::to_string(static_cast<std::uint64_t>(est_stored)) +
                          " events exceeds budget " + std::to_string(opts.event_budget));
    }

    GaugeEventList out;
    out.lo = lo;
    out.hi = hi;
    out.key_scale = keys ? keys->scale : 0;

    const Box box = bounding_box(body, hi);
    if (box.volume() > opts.box_budget * 16.0) {
        throw BudgetError("gauge_events: bounding box volume exceeds budget");
    }
    const RowSolver solver_hi(body, hi, keys);
    const RowSolver solver_lo(body, lo, keys);

    const unsigned nthreads = std::max(1u, opts.threads);
    std::vector<std::uint64_t> base(nthreads, 0);
    std::vector<std::uint64_t> ties(nthreads, 0);
    std::vector<std::vector<std::uint32_t>> hist(histogram ? nthreads : 0);
    std::vector<std::vector<std::int64_t>> key_lists(nthreads);
    std::vector<std::vector<double>> rho_lists(nthreads);

    run_slabs(box, nthreads, [&](std::int64_t a, std::int64_t b, unsigned idx) {
        std::uint64_t local_base = 0;
        std::uint64_t local_ties = 0;
        std::uint64_t scratch = 0;
        if (histogram) hist[idx].assign(static_cast<std::size_t>(key_hi - key_lo), 0u);
        auto emit = [&](const Prefix& p, std::int64_t x) {
            if (keys) {
                const std::int64_t key = solver_hi.key_at(p, x);
                if (histogram) {
                    ++hist[idx][static_cast<std::size_t>(key - key_lo - 1)];
                } else {
                    key_lists[idx].push_back(key);
                }
            } else {
                rho_lists[idx].push_back(std::min(solver_hi.gauge_at(p, x), hi));
            }
        };
        for_each_prefix(box, a, b, [&](const Prefix& p) {
            const Interval outer = solver_hi.row(p, local_ties);
            if (outer.empty()) return;
            const Interval inner = solver_lo.row(p, scratch);
            if (inner.empty()) {
                for (std::int64_t x = outer.lo; x <= outer.hi; ++x) emit(p, x);
                return;
            }
            local_base += static_cast<std::uint64_t>(inner.hi - inner.lo + 1);
            for (std::int64_t x = outer.lo; x < inner.lo; ++x) emit(p, x);
            for (std::int64_t x = inner.hi + 1; x <= outer.hi; ++x) emit(p, x);
        });
        base[idx] = local_base;
        ties[idx] = local_ties;
    });

    out.base_count = std::accumulate(base.begin(), base.end(), std::uint64_t{0});
    out.ties = std::accumulate(ties.begin(), ties.end(), std::uint64_t{0});

    // Smallest double whose scaled square reaches the key, so that N(rho) includes the event.
    auto key_rho = [&](std::int64_t key) {
        double r = std::sqrt(static_cast<double>(key) / static_cast<double>(keys->scale));
        while (floor_scaled_square(r, keys->scale) < key) r = std::nextafter(r, INFINITY);
        while (r > 0.0 && floor_scaled_square(std::nextafter(r, 0.0), keys->scale) >= key) r = std::nextafter(r, 0.0);
        return std::min(r, hi);
    };

    if (histogram) {
        for (unsigned i = 1; i < nthreads; ++i) {
            for (std::size_t j = 0; j < hist[0].size(); ++j) hist[0][j] += hist[i][j];
            hist[i].clear();
            hist[i].shrink_to_fit();
        }
        for (std::size_t j = 0; j < hist[0].size(); ++j) {
            if (hist[0][j] == 0) continue;
            const std::int64_t key = key_lo + 1 + static_cast<std::int64_t>(j);
            out.events.push_back({key_rho(key), hist[0][j], key});
        }
    } else if (keys) {
        std::vector<std::int64_t> all;
        for (auto& v : key_lists) all.insert(all.end(), v.begin(), v.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size();) {
            std::size_t j = i;
            while (j < all.size() && all[j] == all[i]) ++j;
            out.events.push_back({key_rho(all[i]), j - i, all[i]});
            i = j;
        }
    } else {
        std::vector<double> all;
        for (auto& v : rho_lists) all.insert(all.end(), v.begin(), v.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size();) {
            std::size_t j = i;
            while (j < all.size() && all[j] == all[i]) ++j;
            out.events.push_back({all[i], j - i, -1});
            i = j;
        }
    }
    return out;
}

ShellCount shell_count(const Body& body, double tau, double eps, const EnumerationOptions& opts) {
    if (!(eps > 0.0) || !(tau >= eps) || !std::isfinite(tau)) {
        throw PreconditionError("shell_count: need tau >= eps > 0");
    }
    ShellCount out{tau, eps, 0};
    const double inner = tau - eps;
    const double outer = tau + eps;
    if (inner == 0.0) {
        out.count = count_points(body, outer, opts);
        return out;
    }
    const double lo = inner * (1.0 - 1e-9);
    const GaugeEventList ev = gauge_events(body, lo, outer, opts);
    if (ev.key_scale > 0) {
        std::int64_t need = floor_scaled_square(inner, ev.key_scale);
        if (!scaled_square_is_integer(inner, ev.key_scale)) ++need;
        for (const auto& e : ev.events) {
            if (e.exact_key >= need) out.count += e.multiplicity;
        }
    } else {
        const double cut = inner - tie_band(inner);
        for (const auto& e : ev.events) {
            if (e.rho >= cut) out.count += e.multiplicity;
        }
    }
    return out;
}

std::vector<LatticePoint> annulus_points(const Body& body, double lo, double hi, const EnumerationOptions& opts) {
    check_threshold(hi, "annulus_points");
    const int d = body.dim();
    const double vol_lo = lo > 0 ? std::pow(lo, d) : 0.0;
    const double est = body.volume() * (std::pow(hi, d) - vol_lo) * 1.05 + 64.0 * std::pow(hi + 1.0, d - 1);
    if (est > static_cast<double>(opts.event_budget)) {
        throw BudgetError("annulus_points: estimated " + std::to_string(static_cast<std::uint64_t>(est)) +
                          " points exceeds budget " + std::to_string(opts.event_budget));
    }
    const auto keys = usable_keys(body, hi);
    const Box box = bounding_box(body, hi);
    const RowSolver solver_hi(body, hi, keys);
    const bool has_inner = lo >= 0.0;
    const RowSolver solver_lo(body, has_inner ? lo : 0.0, keys);

    std::vector<LatticePoint> out;
    std::uint64_t scratch = 0;
    for_each_prefix(box, -box.bound[d - 1], box.bound[d - 1], [&](const Prefix& p) {
        const Interval outer = solver_hi.row(p, scratch);
        if (outer.empty()) return;
        const Interval inner = has_inner ? solver_lo.row(p, scratch) : Interval{};
        auto emit = [&](std::int64_t x) {
            LatticePoint k(d);
            k[0] = x;
            for (int i = 1; i < d; ++i) k[i] = p[i];
            out.push_back(std::move(k));
        };
        if (inner.empty()) {
            for (std::int64_t x = outer.lo; x <= outer.hi; ++x) emit(x);
        } else {
            for (std::int64_t x = outer.lo; x < inner.lo; ++x) emit(x);
            for (std::int64_t x = inner.hi + 1; x <= outer.hi; ++x) emit(x);
        }
    });
    return out;
}

}  // namespace latdisc
