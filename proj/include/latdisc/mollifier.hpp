#pragma once

#include <span>
#include <vector>

#include "latdisc/body.hpp"
#include "latdisc/lattice.hpp"

namespace latdisc {

/// zeta_eps(x) = eps^-d zeta(x / eps), zeta(x) = c_d exp(-1 / (1 - |x|^2)) on the unit ball.
struct Bump {
    int dim = 2;
    double eps = 0.1;
};

/// c_d, the constant giving zeta unit mass.
double bump_normalizer(int dim);
double bump_value(const Bump& bump, std::span<const double> x);
/// Profile exp(-1/(1-s^2)) times c_d, as a function of the radius s in [0, 1).
double bump_profile(int dim, double s);
/// Fraction of the bump mass inside radius s (s in units of eps).
double bump_radial_mass(int dim, double s);

struct MollifierOptions {
    double eps_max = 1.0;
    /// Absolute quadrature tolerance per lattice point.
    double point_tol = 1e-11;
    EnumerationOptions enumeration;
};

struct MollifiedValue {
    double value = 0.0;
    /// Sum of per-point quadrature error estimates.
    double error = 0.0;
    std::uint64_t inside = 0;
    std::uint64_t band = 0;
};

/// (chi_{t Omega} * zeta_eps)(k) for one lattice point.
MollifiedValue point_contribution(const Body& body, double t, double eps, std::span<const double> k,
                                  const MollifierOptions& opts = {});

/// N_eps(t); supports d = 2 and d = 3.
MollifiedValue mollified_count(const Body& body, double t, double eps, const MollifierOptions& opts = {});
/// E_eps(t) = N_eps(t) - t^d vol.
MollifiedValue mollified_rest(const Body& body, double t, double eps, const MollifierOptions& opts = {});

struct SandwichRow {
    double t = 0.0;
    double eps = 0.0;
    std::uint64_t count = 0;
    MollifiedValue lower;  // N_eps(t - eps)
    MollifiedValue upper;  // N_eps(t + eps)
    bool violated = false;
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    std::size_t violations = 0;
    /// Smallest C with |E_eps(t-eps)| - C t^{d-1} eps <= |E(t)| <= |E_eps(t+eps)| + C t^{d-1} eps on the grid.
    double C_min = 0.0;
};

struct TEps {
    double t;
    double eps;
};

SandwichReport sandwich_check(const Body& body, const std::vector<TEps>& grid, const MollifierOptions& opts = {});

struct ShellDiag {
    double tau = 0.0;
    double eps = 0.0;
    /// 4 eps / delta0 with delta0 half the inradius.
    double eps_check = 0.0;
    double delta0 = 0.0;
    std::uint64_t S = 0;
    /// min over |t - tau| <= eps of N'_{eps_check}(t) eps / S; 0 when S = 0.
    double c0_hat = 0.0;
    double min_derivative = 0.0;
    /// tau^{d-1} eps.
    double rhs_linear = 0.0;
    /// Integral of E^2 N' over [tau - eps/2, tau + eps/2] (mollified at eps_check).
    double rhs_integral = 0.0;
    double rhs_cuberoot = 0.0;
    bool vacuous = false;
};

ShellDiag shell_bound_diag(const Body& body, double tau, double eps, const MollifierOptions& opts = {});

}  // namespace latdisc
