#include "latdisc/fit.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "latdisc/error.hpp"

namespace latdisc {

LinearFit ols(std::span<const double> x, std::span<const double> y, double confidence) {
    if (x.size() != y.size()) throw PreconditionError("ols: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw PreconditionError("ols: need at least two points");

    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw PreconditionError("ols: x values are all equal");

    LinearFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr += r * r;
        fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
    }
    if (n > 2) {
        fit.slope_stderr = std::sqrt(ssr / (n - 2) / sxx);
        boost::math::students_t dist(static_cast<double>(n - 2));
        const double q = boost::math::quantile(dist, 0.5 + confidence / 2.0);
        fit.ci_low = fit.slope - q * fit.slope_stderr;
        fit.ci_high = fit.slope + q * fit.slope_stderr;
    } else {
        fit.slope_stderr = std::numeric_limits<double>::infinity();
        fit.ci_low = -std::numeric_limits<double>::infinity();
        fit.ci_high = std::numeric_limits<double>::infinity();
    }
    return fit;
}

}  // namespace latdisc
