#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "latdisc/body.hpp"

namespace latdisc {

struct EnumerationOptions {
    /// Upper bound on stored gauge events.
    std::uint64_t event_budget = std::uint64_t{1} << 28;
    /// Upper bound on the integer bounding-box volume scanned by a count.
    double box_budget = 68719476736.0;  // 2^36
    unsigned threads = 1;
};

/// rho(k)^2 = (sum_i weights[i] * k_i^2) / scale, exactly, for Ball/Ellipsoid
/// bodies whose semiaxes are small rationals.
struct QuadraticKeys {
    std::vector<std::int64_t> weights;
    std::int64_t scale = 1;
};

std::optional<QuadraticKeys> exact_keys(const Body& body);

/// Half-width of the tie band used for bodies without exact keys.
inline double tie_band(double t) { return 1e-12 * (t > 1.0 ? t : 1.0); }

struct CountResult {
    std::uint64_t count = 0;
    /// Boundary points resolved through the tie band (always 0 in exact mode).
    std::uint64_t ties = 0;
    bool exact = false;
};

/// Number of k in Z^d with rho(k) <= t (closed dilate).
std::uint64_t count_points(const Body& body, double t, const EnumerationOptions& opts = {});
CountResult count_points_detailed(const Body& body, double t, const EnumerationOptions& opts = {});

struct GaugeEvent {
    double rho = 0.0;
    std::uint64_t multiplicity = 0;
    /// Exact scaled squared gauge, -1 when the body has no exact keys.
    std::int64_t exact_key = -1;
};

/// Jump set of N(t) on (lo, hi]: sorted distinct gauge values with multiplicity.
struct GaugeEventList {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<GaugeEvent> events;
    /// N(lo).
    std::uint64_t base_count = 0;
    /// Scale of exact_key (rho^2 = key / key_scale); 0 if keys are absent.
    std::int64_t key_scale = 0;
    std::uint64_t ties = 0;

    std::uint64_t total_multiplicity() const;
};

GaugeEventList gauge_events(const Body& body, double lo, double hi, const EnumerationOptions& opts = {});

struct ShellCount {
    double tau = 0.0;
    double eps = 0.0;
    std::uint64_t count = 0;
};

/// card{k : tau - eps <= rho(k) <= tau + eps}.
ShellCount shell_count(const Body& body, double tau, double eps, const EnumerationOptions& opts = {});

using LatticePoint = std::vector<std::int64_t>;

/// Lattice points with lo < rho(k) <= hi; lo < 0 selects every k with rho(k) <= hi.
std::vector<LatticePoint> annulus_points(const Body& body, double lo, double hi,
                                         const EnumerationOptions& opts = {});

// Exact threshold helpers: floor(t^2 * scale) and whether t^2 * scale is an integer.
std::int64_t floor_scaled_square(double t, std::int64_t scale);
bool scaled_square_is_integer(double t, std::int64_t scale);

}  // namespace latdisc
