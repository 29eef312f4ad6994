#pragma once

#include <cstddef>
#include <span>

namespace latdisc {

/// Ordinary least squares y = intercept + slope * x with equal weights.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    /// Two-sided confidence interval for the slope (Student t).
    double ci_low = 0.0;
    double ci_high = 0.0;
    double max_abs_residual = 0.0;
    std::size_t n = 0;
};

LinearFit ols(std::span<const double> x, std::span<const double> y, double confidence = 0.95);

}  // namespace latdisc
