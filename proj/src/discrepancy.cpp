#include "latdisc/discrepancy.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "latdisc/error.hpp"

namespace latdisc {

namespace {

// Neumaier compensated sum.
struct Accumulator {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + comp; }
};

// Integral of (N - V t^d)^2 [/(V t^d)^2] over [a, b].
double piece_integral(double a, double b, double N, double V, int d, bool relative) {
    using boost::math::quadrature::gauss;
    if (!(b > a)) return 0.0;
    if (!relative) {
        // Degree 2d polynomial: 8-point Gauss-Legendre is exact for d <= 7.
        auto f = [&](double t) {
            const double e = N - V * std::pow(t, d);
            return e * e;
        };
        if (d <= 7) return gauss<double, 8>::integrate(f, a, b);
        const int pieces = 1 + d / 4;
        double s = 0.0;
        for (int i = 0; i < pieces; ++i) {
            s += gauss<double, 20>::integrate(f, a + (b - a) * i / pieces, a + (b - a) * (i + 1) / pieces);
        }
        return s;
    }
    auto f = [&](double t) {
        const double vt = V * std::pow(t, d);
        const double e = N / vt - 1.0;
        return e * e;
    };
    const double width = 0.05 * a;
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / width)));
    if (pieces == 1) return gauss<double, 8>::integrate(f, a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < pieces; ++i) {
        const double x0 = a + (b - a) * static_cast<double>(i) / static_cast<double>(pieces);
        const double x1 = i + 1 == pieces ? b : a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(pieces);
        s += gauss<double, 8>::integrate(f, x0, x1);
    }
    return s;
}

// Whether an event lies at or below the dilation x (exact when keys exist).
struct EventCompare {
    std::int64_t scale;

    bool at_or_below(const GaugeEvent& e, double x) const {
        if (scale > 0 && e.exact_key >= 0) {
            const std::int64_t k = floor_scaled_square(x, scale);
            return e.exact_key <= k;
        }
        return e.rho <= x;
    }
    bool below(const GaugeEvent& e, double x) const {
        if (scale > 0 && e.exact_key >= 0) {
            const std::int64_t k = floor_scaled_square(x, scale);
            if (e.exact_key < k) return true;
            return e.exact_key == k && !scaled_square_is_integer(x, scale);
        }
        return e.rho < x;
    }
};

}  // namespace

double lattice_rest(const Body& body, double t, const EnumerationOptions& opts) {
    const double n = static_cast<double>(count_points(body, t, opts));
    return n - std::pow(t, body.dim()) * body.volume();
}

WindowStat window_msd_from_events(const GaugeEventList& list, int dim, double volume, double R, double h,
                                  bool relative) {
    if (!(R >= 0.0) || !(h > 0.0)) throw PreconditionError("window_msd: need R >= 0 and h > 0");
    if (relative && !(R > 0.0)) throw PreconditionError("window_msd: relative form needs R > 0");
    const double end = R + h;
    if (list.lo > R || list.hi < end) throw PreconditionError("window_msd: event list does not cover the window");

    const EventCompare cmp{list.key_scale};
    std::size_t i = 0;
    double n = static_cast<double>(list.base_count);
    while (i < list.events.size() && cmp.at_or_below(list.events[i], R)) {
        n += static_cast<double>(list.events[i].multiplicity);
        ++i;
    }

    WindowStat out;
    out.R = R;
    out.h = h;
    out.relative = relative;
    Accumulator acc;
    double a = R;
    for (; i < list.events.size() && cmp.below(list.events[i], end); ++i) {
        const double b = std::clamp(list.events[i].rho, a, end);
        acc.add(piece_integral(a, b, n, volume, dim, relative));
        n += static_cast<double>(list.events[i].multiplicity);
        a = b;
        ++out.events_used;
    }
    acc.add(piece_integral(a, end, n, volume, dim, relative));
    out.G = std::sqrt(std::max(0.0, acc.value()) / h);
    return out;
}

WindowStat window_msd(const Body& body, double R, double h, bool relative, const EnumerationOptions& opts) {
    if (!(R >= 0.0) || !(h > 0.0) || !std::isfinite(R + h)) {
        throw PreconditionError("window_msd: need R >= 0 and h > 0");
    }
    if (relative && !(R > 0.0)) throw PreconditionError("window_msd: relative form needs R > 0");
    const GaugeEventList events = gauge_events(body, R, R + h, opts);
    return window_msd_from_events(events, body.dim(), body.volume(), R, h, relative);
}

double WindowRule::length(double R) const {
    switch (kind) {
        case WindowKind::full:
            return R;
        case WindowKind::short_log:
            return std::max(1.0, std::ceil(std::log(R)));
        case WindowKind::fixed:
            return h;
    }
    return R;
}

WindowRule parse_window_rule(const std::string& text) {
    if (text == "full") return {WindowKind::full, 1.0};
    if (text == "short") return {WindowKind::short_log, 1.0};
    if (text.rfind("fixed:", 0) == 0) {
        try {
            std::size_t used = 0;
            const double h = std::stod(text.substr(6), &used);
            if (used == text.size() - 6 && h > 0.0 && std::isfinite(h)) return {WindowKind::fixed, h};
        } catch (const std::exception&) {
        }
    }
    throw PreconditionError("window rule must be 'full', 'short' or 'fixed:<h>' (got '" + text + "')");
}

std::string to_string(const WindowRule& rule) {
    switch (rule.kind) {
        case WindowKind::full:
            return "full";
        case WindowKind::short_log:
            return "short";
        case WindowKind::fixed: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "fixed:%.17g", rule.h);
            return buf;
        }
    }
    return "full";
}

double bound_d(int dim, double R) {
    if (dim == 2) return std::pow(R, -1.5);
    if (dim == 3) return std::log(R) / (R * R);
    return 1.0 / (R * R);
}

double normalized_stat(const SweepTable& table, int dim) {
    if (table.rows.empty()) throw PreconditionError("normalized_stat: empty table");
    double best = 0.0;
    for (const auto& row : table.rows) {
        if (dim == 3 && !(row.R > 1.0)) throw PreconditionError("normalized_stat: d = 3 needs R > 1");
        if (!(row.R > 0.0)) throw PreconditionError("normalized_stat: R must be positive");
        best = std::max(best, row.G / bound_d(dim, row.R));
    }
    return best;
}

double normalized_stat(const SweepTable& table) { return normalized_stat(table, table.dim); }

SweepResult fit_table(const SweepTable& table, const WindowRule& rule, double residual_threshold) {
    if (table.rows.size() < 2) throw PreconditionError("fit needs at least 2 rows");
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yd;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        if (i > 0 && !(r.R > table.rows[i - 1].R)) throw PreconditionError("fit: R must be strictly increasing");
        if (!(r.G > 0.0)) throw ConvergenceError("fit: G must be positive for a log-log fit");
        x.push_back(std::log(r.R));
        y.push_back(std::log(r.G));
        if (table.dim == 3) yd.push_back(std::log(r.G / std::log(r.R)));
    }
    SweepResult out;
    out.table = table;
    out.rule = rule;
    out.fit = ols(x, y);
    out.unstable = out.fit.max_abs_residual > residual_threshold;
    if (table.dim == 3) {
        for (const auto& r : table.rows) {
            if (!(r.R > 1.0)) throw PreconditionError("fit: d = 3 needs R > 1");
        }
        out.deflated_fit = ols(x, yd);
        out.unstable = out.unstable || out.deflated_fit->max_abs_residual > residual_threshold;
    }
    return out;
}

SweepResult sweep_and_fit(const Body& body, const std::vector<double>& R_grid, const WindowRule& rule,
                          const SweepOptions& opts) {
    if (R_grid.size() < 4) throw PreconditionError("sweep: R grid needs at least 4 points");
    for (std::size_t i = 0; i < R_grid.size(); ++i) {
        if (!(R_grid[i] > 0.0) || !std::isfinite(R_grid[i])) throw PreconditionError("sweep: R must be positive");
        if (i > 0 && !(R_grid[i] > R_grid[i - 1])) throw PreconditionError("sweep: R grid must be increasing");
    }
    if (body.dim() == 3 && R_grid.front() <= 1.0) throw PreconditionError("sweep: d = 3 needs R > 1");

    SweepTable table;
    table.body = body.descriptor();
    table.dim = body.dim();
    table.relative = opts.relative;
    table.rows.resize(R_grid.size());

    // Rows are independent; each is enumerated with the configured thread count.
    for (std::size_t i = 0; i < R_grid.size(); ++i) {
        const double R = R_grid[i];
        const double h = rule.length(R);
        const WindowStat w = window_msd(body, R, h, opts.relative, opts.enumeration);
        table.rows[i] = {R, h, w.G, w.G / bound_d(table.dim, R), w.events_used};
    }
    return fit_table(table, rule, opts.residual_threshold);
}

}  // namespace latdisc
