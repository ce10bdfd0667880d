#include <algorithm>
#include <cmath>

#include "etsfs/core/stats.hpp"
#include "etsfs/features/features.hpp"
#include "index.hpp"

namespace etsfs::features {

namespace {

std::size_t next_odd(std::size_t k) { return k % 2 == 1 ? k : k + 1; }

std::vector<double> moving_average(std::span<const double> x, std::size_t len) {
    if (x.size() < len) return {};
    std::vector<double> out(x.size() - len + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += x[i];
    out[0] = s / static_cast<double>(len);
    for (std::size_t i = len; i < x.size(); ++i) {
        s += x[i] - x[i - len];
        out[i - len + 1] = s / static_cast<double>(len);
    }
    return out;
}

/// Trend window for the non-seasonal smooth: roughly a tenth of the sample,
/// never narrower than 7 points.
std::size_t nonseasonal_window(std::size_t n) {
    return next_odd(std::max<std::size_t>(7, (n + 9) / 10));
}

} // namespace

std::vector<double> loess(std::span<const double> x, std::size_t window) {
    const std::size_t n = x.size();
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    if (n == 1) {
        out[0] = x[0];
        return out;
    }
    const std::size_t q = std::max<std::size_t>(window, 2);
    const double range = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t left, right;
        if (q >= n) {
            left = 0;
            right = n - 1;
        } else {
            left = i >= q / 2 ? i - q / 2 : 0;
            right = left + q - 1;
            if (right > n - 1) {
                right = n - 1;
                left = n - q;
            }
        }
        double h = static_cast<double>(std::max(i - left, right - i));
        if (q > n) h += static_cast<double>((q - n) / 2);
        const double h1 = 0.001 * h, h9 = 0.999 * h;

        double sw = 0.0, swj = 0.0;
        thread_local std::vector<double> w;
        w.assign(right - left + 1, 0.0);
        for (std::size_t j = left; j <= right; ++j) {
            const double r = std::abs(static_cast<double>(j) - static_cast<double>(i));
            double wj = 0.0;
            if (r <= h9) {
                if (r <= h1) wj = 1.0;
                else {
                    const double u = r / h;
                    const double c = 1.0 - u * u * u;
                    wj = c * c * c;
                }
            }
            w[j - left] = wj;
            sw += wj;
            swj += wj * static_cast<double>(j);
        }
        if (!(sw > 0.0)) {
            out[i] = x[i];
            continue;
        }
        const double a = swj / sw;
        double b = 0.0;
        for (std::size_t j = left; j <= right; ++j) {
            const double d = static_cast<double>(j) - a;
            b += w[j - left] * d * d;
        }
        double fit = 0.0;
        const bool slope = std::sqrt(b / sw) > 0.001 * range;
        for (std::size_t j = left; j <= right; ++j) {
            double wj = w[j - left] / sw;
            if (slope) wj *= 1.0 + (static_cast<double>(i) - a) * (static_cast<double>(j) - a) / (b / sw);
            fit += wj * x[j];
        }
        out[i] = fit;
    }
    return out;
}

StlDecomposition stl(std::span<const double> x, int period) {
    const std::size_t n = x.size();
    StlDecomposition d;
    d.seasonal.assign(n, 0.0);
    const auto m = static_cast<std::size_t>(std::max(period, 1));

    if (m < 2 || n < 2 * m) {
        d.trend = loess(x, nonseasonal_window(n));
    } else {
        const double s_window = 10.0 * static_cast<double>(n) + 1.0;
        const auto t_window = next_odd(static_cast<std::size_t>(
            std::ceil(1.5 * static_cast<double>(m) / (1.0 - 1.5 / s_window))));
        const auto l_window = next_odd(m);

        d.trend.assign(n, 0.0);
        std::vector<double> cycle(n + 2 * m), deseason(n);
        for (int pass = 0; pass < 2; ++pass) {
            // periodic cycle-subseries smoothing reduces to per-phase means
            std::vector<double> sums(m, 0.0), counts(m, 0.0);
            for (std::size_t t = 0; t < n; ++t) {
                sums[t % m] += x[t] - d.trend[t];
                counts[t % m] += 1.0;
            }
            for (std::size_t k = 0; k < n + 2 * m; ++k) {
                const std::size_t phase = (k + m * (n / m + 1) - m) % m;
                cycle[k] = sums[phase] / counts[phase];
            }
            auto low = moving_average(cycle, m);
            low = moving_average(low, m);
            low = moving_average(low, 3);
            low = loess(low, l_window);
            for (std::size_t t = 0; t < n; ++t) {
                d.seasonal[t] = cycle[t + m] - low[t];
                deseason[t] = x[t] - d.seasonal[t];
            }
            d.trend = loess(deseason, t_window);
        }
        std::vector<double> sums(m, 0.0), counts(m, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            sums[t % m] += d.seasonal[t];
            counts[t % m] += 1.0;
        }
        for (std::size_t t = 0; t < n; ++t) d.seasonal[t] = sums[t % m] / counts[t % m];
    }
    d.remainder.resize(n);
    for (std::size_t t = 0; t < n; ++t) d.remainder[t] = x[t] - d.trend[t] - d.seasonal[t];
    return d;
}

void stl_block(std::span<const double> x, int period, FeatureArray& out) {
    const std::size_t n = x.size();
    const auto m = static_cast<std::size_t>(std::max(period, 1));
    const bool seasonal = m >= 2 && n >= 2 * m;
    const auto d = stl(x, period);

    const double vare = stats::variance(d.remainder);
    std::vector<double> deseason(n), detrend(n);
    for (std::size_t t = 0; t < n; ++t) {
        deseason[t] = d.trend[t] + d.remainder[t];
        detrend[t] = d.seasonal[t] + d.remainder[t];
    }
    // inputs are z-scored, so an absolute cut-off separates "no variation"
    constexpr double kTiny = 1e-10;
    auto strength = [&](double denom) {
        if (!(denom > kTiny)) return 0.0;
        return std::clamp(1.0 - vare / denom, 0.0, 1.0);
    };
    out[idx::trend] = strength(stats::variance(deseason));
    out[idx::seasonal_strength] = seasonal ? strength(stats::variance(detrend)) : 0.0;

    // variance of leave-one-out variances of the remainder
    {
        double s1 = 0.0, s2 = 0.0;
        for (double r : d.remainder) {
            s1 += r;
            s2 += r * r;
        }
        std::vector<double> loo(n);
        const double nm1 = static_cast<double>(n) - 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = d.remainder[i];
            const double mean = (s1 - r) / nm1;
            loo[i] = (s2 - r * r - nm1 * mean * mean) / (nm1 - 1.0);
        }
        out[idx::spike] = stats::variance(loo);
    }

    // coefficients on orthonormal linear and quadratic polynomials
    {
        std::vector<double> p1(n), p2(n);
        const double tbar = (static_cast<double>(n) + 1.0) / 2.0;
        for (std::size_t i = 0; i < n; ++i) p1[i] = static_cast<double>(i + 1) - tbar;
        double n1 = 0.0;
        for (double v : p1) n1 += v * v;
        n1 = std::sqrt(n1);
        for (double& v : p1) v /= n1;
        for (std::size_t i = 0; i < n; ++i) p2[i] = (static_cast<double>(i + 1) - tbar) * (static_cast<double>(i + 1) - tbar);
        const double m2 = stats::mean(p2);
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p2[i] -= m2;
            proj += p2[i] * p1[i];
        }
        double n2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p2[i] -= proj * p1[i];
            n2 += p2[i] * p2[i];
        }
        n2 = std::sqrt(n2);
        double lin = 0.0, curv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lin += d.trend[i] * p1[i];
            curv += n2 > 0.0 ? d.trend[i] * p2[i] / n2 : 0.0;
        }
        out[idx::linearity] = lin;
        out[idx::curvature] = curv;
    }

    const auto ea = stats::acf(d.remainder, 10);
    out[idx::e_acf1] = ea[0];
    double s = 0.0;
    for (double v : ea) s += v * v;
    out[idx::e_acf10] = s;

    if (seasonal) {
        const auto first = std::span<const double>(d.seasonal).first(m);
        out[idx::peak] = static_cast<double>(std::max_element(first.begin(), first.end()) - first.begin() + 1);
        out[idx::trough] = static_cast<double>(std::min_element(first.begin(), first.end()) - first.begin() + 1);
    } else {
        out[idx::peak] = 0.0;
        out[idx::trough] = 0.0;
    }
    out[idx::nperiods] = seasonal ? 1.0 : 0.0;
    out[idx::seasonal_period] = static_cast<double>(m);
}

} // namespace etsfs::features
