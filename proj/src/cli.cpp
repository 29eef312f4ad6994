#include "latdisc/cli.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <ostream>

#include <json.hpp>

#include "latdisc/body.hpp"
#include "latdisc/discrepancy.hpp"
#include "latdisc/error.hpp"
#include "latdisc/fourier.hpp"
#include "latdisc/lattice.hpp"
#include "latdisc/mollifier.hpp"
#include "latdisc/rotations.hpp"

namespace latdisc {

namespace {

using json = nlohmann::ordered_json;

// JSON has no infinities; those become the strings "inf" / "-inf".
json num(double x) {
    if (std::isfinite(x)) return x;
    return format_number(x);
}

json fit_json(const LinearFit& f) {
    return {{"slope", num(f.slope)},
            {"intercept", num(f.intercept)},
            {"slope_stderr", num(f.slope_stderr)},
            {"ci_low", num(f.ci_low)},
            {"ci_high", num(f.ci_high)},
            {"max_abs_residual", num(f.max_abs_residual)},
            {"n", f.n}};
}

struct Artifacts {
    std::string stdout_text;
    std::vector<std::pair<std::string, std::string>> files;
};

struct Job {
    const std::string& command;
    const Config& cfg;
    const RunContext& ctx;

    Body body() const { return parse_body(cfg.require_string(command, "body")); }

    EnumerationOptions enumeration() const {
        EnumerationOptions o;
        o.threads = ctx.threads;
        const auto budget = cfg.get_int(command, "budget", -1);
        if (budget == 0 || budget < -1) throw PreconditionError("field 'budget': must be positive");
        if (budget > 0) o.event_budget = std::uint64_t(budget);
        o.box_budget = cfg.get_double(command, "box_budget", o.box_budget);
        if (!(o.box_budget > 0)) throw PreconditionError("field 'box_budget': must be positive");
        return o;
    }

    Metadata metadata(const Body& b) const {
        Metadata m{{"tool", std::string("latdisc ") + kToolVersion}, {"command", command}, {"body", b.descriptor()}};
        for (const auto& [k, v] : cfg.values()) m.emplace_back("param." + k, v);
        return m;
    }

    json meta_json(const Body& b) const {
        json j = json::object();
        for (const auto& [k, v] : metadata(b)) j[k] = v;
        return j;
    }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Artifacts cmd_count(const Job& job) {
    const Body b = job.body();
    const double t = job.cfg.require_double(job.command, "t");
    const auto lo = job.cfg.find(job.command, "lo");
    const auto eo = job.enumeration();
    Artifacts a;
    if (lo) {
        const double l = parse_double(*lo, "lo");
        if (!(l >= 0.0) || !(l < t)) throw PreconditionError("field 'lo': need 0 <= lo < t");
        const auto ev = gauge_events(b, l, t, eo);
        CsvTable tab;
        tab.metadata = job.metadata(b);
        tab.metadata.emplace_back("lo", format_number(l));
        tab.metadata.emplace_back("hi", format_number(t));
        tab.metadata.emplace_back("base_count", std::to_string(ev.base_count));
        tab.metadata.emplace_back("ties", std::to_string(ev.ties));
        tab.columns = {"rho", "multiplicity"};
        for (const auto& e : ev.events) tab.rows.push_back({format_number(e.rho), std::to_string(e.multiplicity)});
        a.files.emplace_back("events.csv", to_csv(tab));
        a.stdout_text = std::to_string(ev.base_count + ev.total_multiplicity()) + "\n";
    } else {
        a.stdout_text = std::to_string(count_points(b, t, eo)) + "\n";
    }
    return a;
}

Artifacts cmd_msd(const Job& job) {
    const Body b = job.body();
    const double R = job.cfg.require_double(job.command, "R");
    const double h = job.cfg.get_double(job.command, "h", R);
    const bool relative = job.cfg.get_bool(job.command, "relative", true);
    const auto w = window_msd(b, R, h, relative, job.enumeration());
    json j = {{"meta", job.meta_json(b)},
              {"R", num(w.R)},
              {"h", num(w.h)},
              {"relative", w.relative},
              {"G", num(w.G)},
              {"events_used", w.events_used}};
    return {format_number(w.G) + "\n", {{"msd.json", dump(j)}}};
}

Artifacts cmd_sweep(const Job& job) {
    const Body b = job.body();
    const auto grid = parse_grid(job.cfg.get_string(job.command, "R", "2^4..2^11"), "R");
    const auto rule = parse_window_rule(job.cfg.get_string(job.command, "window", "full"));
    SweepOptions so;
    so.relative = job.cfg.get_bool(job.command, "relative", true);
    so.residual_threshold = job.cfg.get_double(job.command, "residual_threshold", 0.5);
    so.enumeration = job.enumeration();
    const auto res = sweep_and_fit(b, grid, rule, so);

    CsvTable tab;
    tab.metadata = job.metadata(b);
    tab.columns = {"R", "h", "G", "normalized", "events_used"};
    for (const auto& r : res.table.rows) tab.add_row({r.R, r.h, r.G, r.normalized, double(r.events_used)});

    json rows = json::array();
    for (const auto& r : res.table.rows)
        rows.push_back({{"R", num(r.R)}, {"h", num(r.h)}, {"G", num(r.G)}, {"normalized", num(r.normalized)},
                        {"events_used", r.events_used}});
    json j = {{"meta", job.meta_json(b)},
              {"dim", res.table.dim},
              {"relative", res.table.relative},
              {"window", to_string(res.rule)},
              {"slope", num(res.fit.slope)},
              {"fit", fit_json(res.fit)},
              {"normalized_stat", num(normalized_stat(res.table))},
              {"unstable", res.unstable},
              {"rows", rows}};
    if (res.deflated_fit) j["deflated_fit"] = fit_json(*res.deflated_fit);

    PlotSeries s{"G(R)", {}, {}};
    for (const auto& r : res.table.rows) {
        if (r.G > 0) {
            s.x.push_back(r.R);
            s.y.push_back(r.G);
        }
    }
    Artifacts a{format_number(res.fit.slope) + "\n", {{"sweep.csv", to_csv(tab)}, {"sweep.json", dump(j)}}};
    if (!s.x.empty())
        a.files.emplace_back("sweep.svg", loglog_svg(b.descriptor() + " sweep", {s}, PlotLine{res.fit.slope, res.fit.intercept}));
    return a;
}

MollifierOptions mollifier_options(const Job& job) {
    MollifierOptions mo;
    mo.eps_max = job.cfg.get_double(job.command, "eps_max", mo.eps_max);
    mo.point_tol = job.cfg.get_double(job.command, "point_tol", mo.point_tol);
    mo.enumeration = job.enumeration();
    return mo;
}

json mollified_json(const MollifiedValue& v) {
    return {{"value", num(v.value)}, {"error", num(v.error)}, {"inside", v.inside}, {"band", v.band}};
}

Artifacts cmd_mollify(const Job& job) {
    const Body b = job.body();
    const double t = job.cfg.require_double(job.command, "t");
    const double eps = job.cfg.require_double(job.command, "eps");
    const auto mo = mollifier_options(job);
    const auto grid_text = job.cfg.find(job.command, "sandwich_t");
    std::vector<double> grid;
    if (grid_text) grid = parse_grid(*grid_text, "sandwich_t");
    const double seps = job.cfg.get_double(job.command, "sandwich_eps", eps);

    const auto v = mollified_count(b, t, eps, mo);
    const double vol_t = b.volume() * std::pow(t, b.dim());
    json j = {{"meta", job.meta_json(b)},
              {"t", num(t)},
              {"eps", num(eps)},
              {"N_eps", mollified_json(v)},
              {"E_eps", num(v.value - vol_t)},
              {"N", count_points(b, t, mo.enumeration)}};
    Artifacts a{format_number(v.value) + "\n", {}};
    if (!grid.empty()) {
        std::vector<TEps> te;
        for (double g : grid) te.push_back({g, seps});
        const auto rep = sandwich_check(b, te, mo);
        CsvTable tab;
        tab.metadata = job.metadata(b);
        tab.columns = {"t", "eps", "N", "N_eps_lower", "N_eps_upper", "lower_error", "upper_error", "violated"};
        for (const auto& r : rep.rows)
            tab.add_row({r.t, r.eps, double(r.count), r.lower.value, r.upper.value, r.lower.error, r.upper.error,
                         r.violated ? 1.0 : 0.0});
        a.files.emplace_back("sandwich.csv", to_csv(tab));
        j["sandwich"] = {{"points", rep.rows.size()}, {"violations", rep.violations}, {"C_min", num(rep.C_min)}};
    }
    a.files.emplace_back("mollify.json", dump(j));
    return a;
}

Artifacts cmd_poisson(const Job& job) {
    const Body b = job.body();
    const double t = job.cfg.require_double(job.command, "t");
    const double eps = job.cfg.require_double(job.command, "eps");
    const double K = job.cfg.require_double(job.command, "K");
    PoissonOptions po;
    po.tail_tol = job.cfg.get_double(job.command, "tail_tol", po.tail_tol);
    po.skip_direct = job.cfg.get_bool(job.command, "skip_direct", false);
    po.threads = job.ctx.threads;
    const auto r = poisson_rest(b, t, eps, K, po);
    json j = {{"meta", job.meta_json(b)},
              {"t", num(r.t)},
              {"eps", num(r.eps)},
              {"K", num(r.K)},
              {"poisson", num(r.poisson)},
              {"imag", num(r.imag)},
              {"direct", po.skip_direct ? json(nullptr) : num(r.direct)},
              {"direct_error", num(r.direct_error)},
              {"difference", po.skip_direct ? json(nullptr) : num(std::abs(r.poisson - r.direct))},
              {"tail_bound", num(r.tail_bound)},
              {"terms", r.terms}};
    std::string line = format_number(r.poisson);
    if (!po.skip_direct) line += " " + format_number(r.direct);
    return {line + "\n", {{"poisson.json", dump(j)}}};
}

Artifacts cmd_fourier(const Job& job) {
    const Body b = job.body();
    const auto radii = parse_grid(job.cfg.get_string(job.command, "radii", "log:1..1000:200"), "radii");
    const auto ndir = job.cfg.get_int(job.command, "directions", 16);
    if (ndir < 1 || ndir > 100000) throw PreconditionError("field 'directions': must be in [1, 1e5]");
    const bool fit_flat = job.cfg.get_bool(job.command, "fit_flat", true);
    const auto scan = decay_scan(b, radii, default_directions(int(ndir)), fit_flat);

    CsvTable tab;
    tab.metadata = job.metadata(b);
    tab.columns = {"xi_norm", "direction_index", "abs_ft", "scaled"};
    for (const auto& r : scan.rows) tab.add_row({r.xi_norm, double(r.direction_index), r.abs_ft, r.scaled});

    json flats = json::array();
    for (const auto& f : scan.flat)
        flats.push_back({{"normal", {num(f.normal[0]), num(f.normal[1])}},
                         {"type", f.type},
                         {"slope", num(f.slope)},
                         {"slope_stderr", num(f.slope_stderr)}});
    json dsup = json::array();
    for (double v : scan.direction_sup) dsup.push_back(num(v));
    json j = {{"meta", job.meta_json(b)},
              {"sup_scaled", num(scan.sup_scaled)},
              {"sup_scaled_half", num(scan.sup_scaled_half)},
              {"direction_sup", dsup},
              {"flat", flats}};

    // Plot: max over directions of |f^| against |xi|.
    std::map<double, double> env;
    for (const auto& r : scan.rows) env[r.xi_norm] = std::max(env[r.xi_norm], r.abs_ft);
    PlotSeries s{"max |f^| over directions", {}, {}};
    for (const auto& [x, y] : env)
        if (y > 0) s.x.push_back(x), s.y.push_back(y);
    Artifacts a{format_number(scan.sup_scaled) + "\n", {{"fourier.csv", to_csv(tab)}, {"fourier.json", dump(j)}}};
    if (!s.x.empty()) a.files.emplace_back("fourier.svg", loglog_svg(b.descriptor() + " |f^|", {s}));
    return a;
}

Artifacts cmd_rotate(const Job& job) {
    const Body b = job.body();
    const auto angles = parse_angles(job.cfg.get_string(job.command, "angles", "0,golden,atan:3/7"));
    const double K = job.cfg.get_double(job.command, "K", 1e4);
    RotationScanOptions ro;
    ro.eps = job.cfg.get_double(job.command, "eps", ro.eps);
    ro.R = job.cfg.get_double(job.command, "R", 256.0);
    ro.rotated_strip = job.cfg.get_bool(job.command, "rotated_strip", false);
    ro.enumeration = job.enumeration();
    const auto reps = rotation_scan(b, angles, K, ro);

    CsvTable tab;
    tab.metadata = job.metadata(b);
    tab.columns = {"theta", "mP", "K", "M_hat", "cond_stat", "G_scaled"};
    json arr = json::array();
    for (const auto& r : reps) {
        const double gs = r.discrepancy ? r.discrepancy->G_scaled : NAN;
        tab.add_row({r.theta, double(r.type), K, r.M_hat, r.condition, gs});
        json flats = json::array();
        for (const auto& f : r.flats) {
            json prof = json::array();
            for (const auto& o : f.sup.profile)
                prof.push_back({{"octave", o.octave}, {"cumulative", num(o.cumulative)}, {"local", num(o.local)}});
            flats.push_back({{"mP", f.type},
                             {"normal", {num(f.normal[0]), num(f.normal[1])}},
                             {"K", num(f.K)},
                             {"M_hat", num(f.sup.value)},
                             {"points", f.sup.points},
                             {"profile", prof},
                             {"cond_stat", num(f.condition)}});
        }
        json e = {{"theta", num(r.theta)}, {"M_hat", num(r.M_hat)}, {"cond_stat", num(r.condition)}, {"flats", flats}};
        if (r.discrepancy)
            e["discrepancy"] = {{"R", num(r.discrepancy->R)},
                                {"h", num(r.discrepancy->h)},
                                {"G", num(r.discrepancy->G)},
                                {"G_scaled", num(r.discrepancy->G_scaled)},
                                {"max_abs_delta", num(r.discrepancy->max_abs_delta)}};
        arr.push_back(e);
    }
    std::string text;
    for (const auto& row : tab.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + row[i];
        text += "\n";
    }
    json j = {{"meta", job.meta_json(b)}, {"reports", arr}};
    return {text, {{"rotations.csv", to_csv(tab)}, {"rotations.json", dump(j)}}};
}

Artifacts cmd_diag(const Job& job) {
    const Body b = job.body();
    const double tau = job.cfg.require_double(job.command, "tau");
    const double eps = job.cfg.require_double(job.command, "eps");
    const auto d = shell_bound_diag(b, tau, eps, mollifier_options(job));
    json j = {{"meta", job.meta_json(b)},
              {"tau", num(d.tau)},
              {"eps", num(d.eps)},
              {"eps_check", num(d.eps_check)},
              {"delta0", num(d.delta0)},
              {"S", d.S},
              {"c0_hat", num(d.c0_hat)},
              {"min_derivative", num(d.min_derivative)},
              {"rhs_linear", num(d.rhs_linear)},
              {"rhs_integral", num(d.rhs_integral)},
              {"rhs_cuberoot", num(d.rhs_cuberoot)},
              {"shell_lhs", d.S},
              {"shell_rhs_parts", {{"linear", num(d.rhs_linear)}, {"integral_cuberoot", num(d.rhs_cuberoot)}}},
              {"vacuous", d.vacuous}};
    return {std::to_string(d.S) + " " + format_number(d.c0_hat) + "\n", {{"diag.json", dump(j)}}};
}

using Handler = std::function<Artifacts(const Job&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = {
        {"count", cmd_count},           {"msd", cmd_msd},
        {"sweep", cmd_sweep},           {"mollify", cmd_mollify},
        {"poisson-check", cmd_poisson}, {"fourier-scan", cmd_fourier},
        {"rotate-scan", cmd_rotate},    {"diag", cmd_diag},
    };
    return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"count",        "msd",         "sweep", "mollify", "poisson-check",
                                                   "fourier-scan", "rotate-scan", "diag"};
    return names;
}

std::vector<double> parse_angles(const std::string& text) {
    std::vector<double> out;
    std::string tok;
    auto flush = [&] {
        if (tok.empty()) return;
        if (tok == "golden") {
            out.push_back(golden_angle());
        } else if (tok.rfind("atan:", 0) == 0) {
            const std::string arg = tok.substr(5);
            const auto slash = arg.find('/');
            if (slash == std::string::npos) {
                out.push_back(std::atan(parse_double(arg, "angles")));
            } else {
                const double p = parse_double(arg.substr(0, slash), "angles");
                const double q = parse_double(arg.substr(slash + 1), "angles");
                if (q == 0.0) throw PreconditionError("field 'angles': zero denominator in '" + tok + "'");
                out.push_back(std::atan2(p, q));
            }
        } else {
            out.push_back(parse_double(tok, "angles"));
        }
        tok.clear();
    };
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t')
            flush();
        else
            tok += c;
    }
    flush();
    if (out.empty()) throw PreconditionError("field 'angles': empty");
    return out;
}

int run_command(const std::string& command, const Config& config, const RunContext& ctx, std::ostream& err) {
    const auto it = handlers().find(command);
    if (it == handlers().end()) {
        err << "error: unknown command '" << command << "'\n";
        return 1;
    }
    try {
        const Job job{command, config, ctx};
        const Artifacts a = it->second(job);
        for (const auto& [name, content] : a.files) write_text(ctx.out_dir / name, content);
        if (ctx.out) *ctx.out << a.stdout_text;
        return 0;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const BudgetError& e) {
        err << "budget exceeded: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        err << "no convergence: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace latdisc
