#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "etsfs/core/nelder_mead.hpp"
#include "etsfs/core/stats.hpp"
#include "etsfs/features/features.hpp"
#include "index.hpp"

namespace etsfs::features {

namespace {

std::size_t short_lags(std::size_t n) {
    return static_cast<std::size_t>(std::trunc(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

/// R^2 of regressing e_t^2 on its own first `lags` lags (demeaned input).
double arch_r2(std::span<const double> e, std::size_t lags = 12) {
    if (e.size() <= lags + 2) return 0.0;
    const double m = stats::mean(e);
    std::vector<double> sq(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) sq[i] = (e[i] - m) * (e[i] - m);
    const std::size_t rows = sq.size() - lags;
    std::vector<double> y(sq.begin() + static_cast<std::ptrdiff_t>(lags), sq.end());
    std::vector<std::vector<double>> design(lags, std::vector<double>(rows));
    for (std::size_t k = 1; k <= lags; ++k)
        for (std::size_t t = 0; t < rows; ++t) design[k - 1][t] = sq[t + lags - k];
    if (stats::variance(y) <= 0.0) return 0.0;
    return stats::ols(y, design).r_squared;
}

double sum_sq_acf_of_squares(std::span<const double> e, std::size_t lags = 12) {
    std::vector<double> sq(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) sq[i] = e[i] * e[i];
    double s = 0.0;
    for (double r : stats::acf(sq, lags)) s += r * r;
    return s;
}

/// Residuals of an AR model fitted by Yule-Walker with the order picked by AIC.
std::vector<double> prewhiten(std::span<const double> x) {
    const std::size_t n = x.size();
    const double mu = stats::mean(x);
    const auto max_order = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(std::floor(10.0 * std::log10(static_cast<double>(n)))));
    std::vector<double> r(max_order + 1, 0.0);
    for (std::size_t k = 0; k <= max_order; ++k) {
        double s = 0.0;
        for (std::size_t t = k; t < n; ++t) s += (x[t] - mu) * (x[t - k] - mu);
        r[k] = s / static_cast<double>(n);
    }
    std::vector<double> centered(n);
    for (std::size_t t = 0; t < n; ++t) centered[t] = x[t] - mu;
    if (!(r[0] > 0.0)) return centered;

    // Durbin-Levinson, tracking the coefficients of the AIC-best order
    std::vector<double> phi, best_phi;
    double v = r[0];
    double best_aic = static_cast<double>(n) * std::log(v);
    for (std::size_t k = 1; k <= max_order; ++k) {
        double num = r[k];
        for (std::size_t j = 0; j + 1 < k; ++j) num -= phi[j] * r[k - 1 - j];
        const double kappa = num / v;
        std::vector<double> next(k);
        for (std::size_t j = 0; j + 1 < k; ++j) next[j] = phi[j] - kappa * phi[k - 2 - j];
        next[k - 1] = kappa;
        phi = std::move(next);
        v *= 1.0 - kappa * kappa;
        if (!(v > 0.0)) break;
        const double aic = static_cast<double>(n) * std::log(v) + 2.0 * static_cast<double>(k);
        if (aic < best_aic) {
            best_aic = aic;
            best_phi = phi;
        }
    }
    const std::size_t p = best_phi.size();
    std::vector<double> e;
    e.reserve(n - p);
    for (std::size_t t = p; t < n; ++t) {
        double pred = 0.0;
        for (std::size_t j = 0; j < p; ++j) pred += best_phi[j] * centered[t - 1 - j];
        e.push_back(centered[t] - pred);
    }
    return e;
}

/// GARCH(1,1) by Gaussian quasi-likelihood; returns standardized residuals
/// (the first observation, which has no conditional variance, is dropped).
std::vector<double> garch_standardized(std::span<const double> e) {
    const std::size_t n = e.size();
    double v0 = 0.0;
    for (double v : e) v0 += v * v;
    v0 = std::max(v0 / static_cast<double>(n), 1e-12);

    auto path = [&](double omega, double a, double b, std::vector<double>* h_out) {
        double h = v0, nll = 0.0;
        if (h_out) h_out->assign(n, v0);
        for (std::size_t t = 1; t < n; ++t) {
            h = omega + a * e[t - 1] * e[t - 1] + b * h;
            if (!(h > 0.0)) return std::numeric_limits<double>::infinity();
            if (h_out) (*h_out)[t] = h;
            nll += 0.5 * (std::log(h) + e[t] * e[t] / h);
        }
        return nll;
    };

    // coarse grid with variance targeting
    double best = std::numeric_limits<double>::infinity();
    double ba = 0.05, bb = 0.9;
    for (double a : {0.02, 0.05, 0.1, 0.15, 0.2, 0.3}) {
        for (double b : {0.0, 0.3, 0.5, 0.7, 0.8, 0.85, 0.9, 0.95}) {
            if (a + b >= 0.999) continue;
            const double val = path(v0 * (1.0 - a - b), a, b, nullptr);
            if (val < best) {
                best = val;
                ba = a;
                bb = b;
            }
        }
    }
    // refine on (log omega, a, b) with a softmax-style map keeping a + b < 1
    auto unpack = [](std::span<const double> z) {
        const double ea = std::exp(std::clamp(z[1], -30.0, 30.0));
        const double eb = std::exp(std::clamp(z[2], -30.0, 30.0));
        const double denom = 1.0 + ea + eb;
        return std::array<double, 3>{std::exp(std::clamp(z[0], -60.0, 60.0)), ea / denom, eb / denom};
    };
    const double rest = std::max(1.0 - ba - bb, 1e-6);
    std::vector<double> z0{std::log(v0 * rest), std::log(ba / rest), std::log(std::max(bb, 1e-6) / rest)};
    NelderMeadOptions opt;
    opt.max_evaluations = 300;
    const auto res = nelder_mead(
        [&](std::span<const double> z) {
            const auto p = unpack(z);
            return path(p[0], p[1], p[2], nullptr);
        },
        z0, opt);
    const auto p = unpack(res.value < best ? std::span<const double>(res.x) : std::span<const double>(z0));
    std::vector<double> h;
    path(p[0], p[1], p[2], &h);
    std::vector<double> z;
    z.reserve(n > 0 ? n - 1 : 0);
    for (std::size_t t = 1; t < n; ++t) z.push_back(e[t] / std::sqrt(h[t]));
    return z;
}

double arch_lm(std::span<const double> x) {
    const std::size_t lags = 12;
    if (x.size() <= lags + 2) return 0.0;
    return static_cast<double>(x.size() - lags) * arch_r2(x, lags);
}

double lumpiness_or_stability(std::span<const double> x, int period, bool lumpiness) {
    const std::size_t width = period > 1 ? static_cast<std::size_t>(period) : 10;
    const std::size_t n = x.size();
    if (n < 2 * width) return 0.0;
    std::vector<double> stat;
    for (std::size_t lo = 0; lo + width <= n; lo += width) {
        const auto block = x.subspan(lo, width);
        stat.push_back(lumpiness ? stats::variance(block) : stats::mean(block));
    }
    return stats::variance(stat);
}

double nonlinearity(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 6) return 0.0;
    const auto z = zscore(x);
    std::vector<double> y(z.begin() + 1, z.end()), lag(z.begin(), z.end() - 1);
    const auto u = stats::ols(y, {lag}).residuals;
    std::vector<double> sq(lag.size()), cu(lag.size());
    for (std::size_t i = 0; i < lag.size(); ++i) {
        sq[i] = lag[i] * lag[i];
        cu[i] = sq[i] * lag[i];
    }
    const auto v = stats::ols(u, {lag, sq, cu}).residuals;
    double ssr0 = 0.0, ssr1 = 0.0;
    for (double r : u) ssr0 += r * r;
    for (double r : v) ssr1 += r * r;
    if (!(ssr0 > 0.0) || !(ssr1 > 0.0)) return 0.0;
    const double stat = static_cast<double>(y.size()) * std::log(ssr0 / ssr1);
    return 10.0 * stat / static_cast<double>(n);
}

} // namespace

double kpss_level(std::span<const double> x) {
    const std::size_t n = x.size();
    const double mu = stats::mean(x);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = x[i] - mu;
    double s2 = 0.0;
    for (double v : e) s2 += v * v;
    s2 /= static_cast<double>(n);
    const std::size_t l = std::min(short_lags(n), n - 1);
    for (std::size_t s = 1; s <= l; ++s) {
        double c = 0.0;
        for (std::size_t t = s; t < n; ++t) c += e[t] * e[t - s];
        s2 += 2.0 / static_cast<double>(n) * (1.0 - static_cast<double>(s) / static_cast<double>(l + 1)) * c;
    }
    double cum = 0.0, eta = 0.0;
    for (double v : e) {
        cum += v;
        eta += cum * cum;
    }
    return eta / (static_cast<double>(n) * static_cast<double>(n) * s2);
}

double pp_z_alpha(std::span<const double> x) {
    const std::size_t n = x.size() - 1;
    std::vector<double> y(x.begin() + 1, x.end()), lag(x.begin(), x.end() - 1);
    const auto fit = stats::ols(y, {lag});
    const double alpha = fit.coef[1];
    const double nd = static_cast<double>(n);
    const double ybar = stats::mean(y);
    double myybar = 0.0;
    for (double v : y) myybar += (v - ybar) * (v - ybar);
    myybar /= nd * nd;
    const auto& res = fit.residuals;
    double s = 0.0;
    for (double r : res) s += r * r;
    s /= nd;
    const std::size_t l = std::min(short_lags(n), n - 1);
    double sig = s;
    for (std::size_t i = 1; i <= l; ++i) {
        double c = 0.0;
        for (std::size_t t = i; t < n; ++t) c += res[t] * res[t - i];
        sig += 2.0 / nd * (1.0 - static_cast<double>(i) / static_cast<double>(l + 1)) * c;
    }
    const double lambda = 0.5 * (sig - s);
    return nd * (alpha - 1.0) - lambda / myybar;
}

double spectral_entropy(std::span<const double> x) {
    const std::size_t n = x.size();
    const double mu = stats::mean(x);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - mu;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, c);
    const std::size_t k_max = n / 2;
    if (k_max < 2) return 0.0;
    std::vector<double> power(k_max);
    double total = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        power[k - 1] = std::norm(spec[k]);
        total += power[k - 1];
    }
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (double p : power) {
        const double q = p / total;
        if (q > 0.0) h -= q * std::log(q);
    }
    return h / std::log(static_cast<double>(k_max));
}

int crossing_points(std::span<const double> x) {
    const double med = stats::median(x);
    int count = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if ((x[i - 1] <= med) != (x[i] <= med)) ++count;
    return count;
}

int flat_spots(std::span<const double> x) {
    std::array<double, 9> edges;
    for (int k = 1; k <= 9; ++k) edges[k - 1] = stats::quantile(x, k / 10.0);
    auto bin = [&](double v) { return std::count_if(edges.begin(), edges.end(), [&](double e) { return e < v; }); };
    int best = 0, run = 0;
    long prev = -1;
    for (double v : x) {
        const long b = bin(v);
        run = b == prev ? run + 1 : 1;
        prev = b;
        best = std::max(best, run);
    }
    return best;
}

double hurst_rs(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> logs, logrs;
    for (std::size_t s = 8; s <= n; s *= 2) {
        double sum_rs = 0.0;
        int blocks = 0;
        for (std::size_t lo = 0; lo + s <= n; lo += s) {
            const auto b = x.subspan(lo, s);
            const double m = stats::mean(b);
            double cum = 0.0, hi = 0.0, low = 0.0, ss = 0.0;
            for (double v : b) {
                cum += v - m;
                hi = std::max(hi, cum);
                low = std::min(low, cum);
                ss += (v - m) * (v - m);
            }
            const double sd = std::sqrt(ss / static_cast<double>(s));
            if (sd > 0.0) {
                sum_rs += (hi - low) / sd;
                ++blocks;
            }
        }
        if (blocks == 0) continue;
        // Anis-Lloyd expected R/S with the Peters small-sample factor
        const double sd = static_cast<double>(s);
        double tail = 0.0;
        for (std::size_t i = 1; i < s; ++i) tail += std::sqrt((sd - static_cast<double>(i)) / static_cast<double>(i));
        const double lead = s <= 340
            ? std::exp(std::lgamma((sd - 1.0) / 2.0) - std::lgamma(sd / 2.0)) / std::sqrt(std::numbers::pi)
            : 1.0 / std::sqrt(sd * std::numbers::pi / 2.0);
        const double expected = (sd - 0.5) / sd * lead * tail;
        logs.push_back(std::log(sd));
        logrs.push_back(std::log(sum_rs / blocks) - std::log(expected));
    }
    if (logs.size() < 2) return 0.5;
    return 0.5 + stats::fit_line(logs, logrs).slope;
}

void stationarity_block(std::span<const double> x, int period, FeatureArray& out) {
    out[idx::unitroot_kpss] = kpss_level(x);
    out[idx::unitroot_pp] = pp_z_alpha(x);
    out[idx::arch_lm] = arch_lm(x);
    out[idx::crossing_point] = crossing_points(x);
    out[idx::entropy] = spectral_entropy(x);
    out[idx::flat_spots] = flat_spots(x);
    out[idx::hurst] = hurst_rs(x);
    out[idx::lumpiness] = lumpiness_or_stability(x, period, true);
    out[idx::stability] = lumpiness_or_stability(x, period, false);
    out[idx::nonlinearity] = nonlinearity(x);

    const auto white = prewhiten(x);
    out[idx::arch_acf] = sum_sq_acf_of_squares(white);
    out[idx::arch_r2] = arch_r2(white);
    if (white.size() >= 16 && stats::variance(white) > 0.0) {
        const auto g = garch_standardized(white);
        out[idx::garch_acf] = sum_sq_acf_of_squares(g);
        out[idx::garch_r2] = arch_r2(g);
    } else {
        out[idx::garch_acf] = 0.0;
        out[idx::garch_r2] = 0.0;
    }
}

} // namespace etsfs::features
