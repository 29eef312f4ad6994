#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latdisc/body.hpp"
#include "latdisc/fit.hpp"
#include "latdisc/lattice.hpp"

namespace latdisc {

/// E(t) = N(t) - t^d vol.
double lattice_rest(const Body& body, double t, const EnumerationOptions& opts = {});

struct WindowStat {
    double R = 0.0;
    double h = 0.0;
    /// Root mean square of E (or of E / (t^d vol) when relative) over [R, R+h).
    double G = 0.0;
    std::uint64_t events_used = 0;
    bool relative = false;
};

WindowStat window_msd(const Body& body, double R, double h, bool relative, const EnumerationOptions& opts = {});

/// Same integral from a precomputed event list covering (R, hi] with hi >= R+h.
WindowStat window_msd_from_events(const GaugeEventList& events, int dim, double volume, double R, double h,
                                  bool relative);

enum class WindowKind { full, short_log, fixed };

struct WindowRule {
    WindowKind kind = WindowKind::full;
    /// Window length for WindowKind::fixed.
    double h = 1.0;

    double length(double R) const;
};

WindowRule parse_window_rule(const std::string& text);
std::string to_string(const WindowRule& rule);

/// Reference decay: R^{-3/2} (d=2), R^{-2} log R (d=3), R^{-2} (d>=4).
double bound_d(int dim, double R);

struct SweepRow {
    double R = 0.0;
    double h = 0.0;
    double G = 0.0;
    double normalized = 0.0;
    std::uint64_t events_used = 0;
};

struct SweepTable {
    std::string body;
    int dim = 2;
    bool relative = true;
    std::vector<SweepRow> rows;
};

struct SweepOptions {
    bool relative = true;
    /// Fit flagged unstable if some |log residual| exceeds this.
    double residual_threshold = 0.5;
    EnumerationOptions enumeration;
};

struct SweepResult {
    SweepTable table;
    WindowRule rule;
    LinearFit fit;
    /// d = 3 only: fit of log(G / log R).
    std::optional<LinearFit> deflated_fit;
    bool unstable = false;
};

SweepResult sweep_and_fit(const Body& body, const std::vector<double>& R_grid, const WindowRule& rule,
                          const SweepOptions& opts = {});

/// Fits an existing table (R strictly increasing, >= 2 rows).
SweepResult fit_table(const SweepTable& table, const WindowRule& rule, double residual_threshold = 0.5);

/// sup over rows of G / bound_d(R).
double normalized_stat(const SweepTable& table);
double normalized_stat(const SweepTable& table, int dim);

}  // namespace latdisc
