#pragma once

#include <array>
#include <optional>
#include <vector>

#include "latdisc/body.hpp"
#include "latdisc/lattice.hpp"

namespace latdisc {

using Lattice2 = std::array<std::int64_t, 2>;

/// |<v, xi> / <n, xi>|^{-(m-2)/(2(m-1))}; +inf when <v, xi> = 0.
double theta_weight(const FlatPoint& flat, const Vec2& xi);

/// The flat point seen from the rotation A by angle theta: normal and tangent mapped by A* = A^{-1}.
FlatPoint pulled_back(const FlatPoint& flat, double theta);

/// 0 < |k| <= K with dist(k, R A* n_P) < 1, ordered by |k|^2 then lexicographically.
std::vector<Lattice2> near_normal_set(double theta, const FlatPoint& flat, double K);

struct OctaveSup {
    /// Octave j covers 2^j <= |k| < 2^{j+1}.
    int octave = 0;
    /// sup over |k| < 2^{j+1} (cumulative).
    double cumulative = 0.0;
    /// sup over the octave alone.
    double local = 0.0;
};

struct DiophantineSup {
    double value = 0.0;
    std::vector<OctaveSup> profile;
    std::size_t points = 0;
};

/// sup of |k|^{-1+eps} Theta(k) over the near-normal set, Theta taken in the frame (A* n_P, A* v_P).
DiophantineSup diophantine_sup(double theta, const FlatPoint& flat, double eps, double K);

struct ConditionStat {
    std::vector<double> per_point;
    double value = 0.0;
};

/// sup of |k|^{m/(m-2)-eps} |<k, A* v_P>| over 0 < |k| <= K with dist(k, R n_P) < 1 (or R A* n_P when
/// rotated_strip is set), maximized over flat points.
ConditionStat diophantine_condition(const Body& body, double theta, double eps, double K, bool rotated_strip = false);

struct FlatRecord {
    int type = 0;
    Vec2 normal{};
    double K = 0.0;
    DiophantineSup sup;
    double condition = 0.0;
};

struct DiscrepancySummary {
    double R = 0.0;
    double h = 0.0;
    double G = 0.0;
    /// R^{3/2} G.
    double G_scaled = 0.0;
    double max_abs_delta = 0.0;
};

struct RotationReport {
    double theta = 0.0;
    std::vector<FlatRecord> flats;
    double M_hat = 0.0;
    double condition = 0.0;
    int type = 0;
    std::optional<DiscrepancySummary> discrepancy;
};

struct RotationScanOptions {
    double eps = 0.1;
    /// Scale of the short-window discrepancy summary; <= 0 disables it.
    double R = 0.0;
    bool rotated_strip = false;
    EnumerationOptions enumeration;
};

std::vector<RotationReport> rotation_scan(const Body& body, std::vector<double> angles, double K,
                                          const RotationScanOptions& opts = {});

/// Angle with tan theta = (sqrt 5 - 1) / 2.
double golden_angle();

}  // namespace latdisc
