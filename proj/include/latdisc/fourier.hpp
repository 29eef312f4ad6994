#pragma once

#include <complex>
#include <span>
#include <vector>

#include "latdisc/body.hpp"

namespace latdisc {

enum class FtMethod { closed_form, boundary_quadrature };

struct FourierSample {
    Point xi;
    std::complex<double> value;
    FtMethod method = FtMethod::closed_form;
    double error = 0.0;
};

/// Fourier transform of the indicator of the body, f^(xi) = int f(y) exp(-i <y, xi>) dy.
FourierSample indicator_ft(const Body& body, std::span<const double> xi);

struct CapMeasure {
    Point xi;
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
};

/// Surface measure of the boundary caps of depth 1/|xi| at P+(xi) and P-(xi).
CapMeasure cap_measure(const Body& body, std::span<const double> xi);

struct DecayRow {
    double xi_norm = 0.0;
    int direction_index = 0;
    double abs_ft = 0.0;
    /// (1 + |xi|)^{3/2} |f^|
    double scaled = 0.0;
};

struct FlatDecay {
    Vec2 normal;
    int type = 0;
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::vector<double> radii;
    std::vector<double> envelope;
};

struct DecayScan {
    std::vector<Vec2> directions;
    std::vector<double> radii;
    std::vector<DecayRow> rows;
    double sup_scaled = 0.0;
    /// Same sup over every other radius.
    double sup_scaled_half = 0.0;
    std::vector<double> direction_sup;
    /// Finite-type bodies: log-log envelope slope of |f^| along each flat normal.
    std::vector<FlatDecay> flat;
};

/// Evenly spaced unit directions in [0, pi).
std::vector<Vec2> default_directions(int n);
/// n log-spaced radii in [lo, hi].
std::vector<double> log_radii(double lo, double hi, int n);

DecayScan decay_scan(const Body& body, const std::vector<double>& radii, const std::vector<Vec2>& directions,
                     bool fit_flat = true);

/// max of |f^(s u)| over one beat period [r, r + pi / h(u)].
double ft_envelope(const Body& body, const Vec2& u, double r, int samples = 24);

/// zeta^(rho) of the unit bump, radial.
double bump_ft(int dim, double rho);

struct PoissonResult {
    double t = 0.0;
    double eps = 0.0;
    double K = 0.0;
    double poisson = 0.0;
    double imag = 0.0;
    double direct = 0.0;
    double direct_error = 0.0;
    double tail_bound = 0.0;
    std::size_t terms = 0;
};

struct PoissonOptions {
    double tail_tol = 1e-4;
    /// Skip the mollified direct evaluation.
    bool skip_direct = false;
    unsigned threads = 1;
};

/// Upper bound on the truncation error of the Poisson sum beyond |k| > K.
double poisson_tail_bound(const Body& body, double t, double eps, double K);

/// Truncated Poisson sum for E_eps(t) with 0 < |k| <= K, compared against the direct value.
PoissonResult poisson_rest(const Body& body, double t, double eps, double K, const PoissonOptions& opts = {});

}  // namespace latdisc
