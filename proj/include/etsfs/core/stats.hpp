#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace etsfs::stats {

double mean(std::span<const double> x);
/// Sample variance with n - 1 denominator; 0 for fewer than two values.
double variance(std::span<const double> x);
double stddev(std::span<const double> x);
double median(std::span<const double> x);
/// Linear-interpolation quantile (R type 7). `x` need not be sorted.
double quantile(std::span<const double> x, double p);

std::vector<double> diff(std::span<const double> x, std::size_t lag = 1);

/// Sample autocorrelations r_1..r_max_lag with denominator n (lag 0 omitted).
/// Zero-variance input yields all zeros.
std::vector<double> acf(std::span<const double> x, std::size_t max_lag);

/// Partial autocorrelations phi_11..phi_kk by Durbin-Levinson on the sample ACF.
std::vector<double> pacf(std::span<const double> x, std::size_t max_lag);

/// Pearson correlation of two equal-length spans; 0 when either is constant.
double correlation(std::span<const double> a, std::span<const double> b);

struct OlsResult {
    std::vector<double> coef;      // intercept first when requested
    std::vector<double> residuals;
    double rss = 0.0;
    double r_squared = 0.0;
};

/// Least squares of y on the columns of `design` (column-major list of
/// regressors), optionally with an intercept. Rank-deficient designs are
/// solved by column-pivoting QR.
OlsResult ols(std::span<const double> y, const std::vector<std::vector<double>>& design,
              bool intercept = true);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

} // namespace etsfs::stats
