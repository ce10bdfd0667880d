#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "etsfs/core/stats.hpp"
#include "etsfs/features/features.hpp"
#include "index.hpp"

namespace etsfs::features {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Autocorrelation at every lag 0..n-1 about the global mean.
std::vector<double> autocorrs(std::span<const double> y) {
    const std::size_t n = y.size();
    const double m = stats::mean(y);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = y[i] - m;
    std::vector<double> out(n, 0.0);
    double c0 = 0.0;
    for (double v : c) c0 += v * v;
    if (!(c0 > 0.0)) return out;
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) s += c[t] * c[t + k];
        out[k] = s / c0;
    }
    return out;
}

std::size_t first_zero(std::span<const double> y, std::size_t max_tau) {
    const auto ac = autocorrs(y);
    std::size_t i = 0;
    while (i < max_tau && i < ac.size() && ac[i] > 0.0) ++i;
    return i;
}

/// Sample covariance of x[0..n-lag) and x[lag..n) about their own means.
double autocov_lag(std::span<const double> x, std::size_t lag) {
    const std::size_t n = x.size() - lag;
    if (n < 2) return kNaN;
    const auto a = x.first(n), b = x.subspan(lag, n);
    const double ma = stats::mean(a), mb = stats::mean(b);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(n - 1);
}

double autocorr_lag(std::span<const double> x, std::size_t lag) {
    const std::size_t n = x.size() - lag;
    return stats::correlation(x.first(n), x.subspan(lag, n));
}

/// Quantile convention of the reference catch22 code (midpoint plotting
/// positions, clamped at the extremes).
double c22_quantile(std::vector<double> sorted, double p) {
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    const double q = 0.5 / n;
    if (p < q) return sorted.front();
    if (p > 1.0 - q) return sorted.back();
    const double pos = n * p - 0.5;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    if (lo == hi) return sorted[lo];
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Labels 1..groups by equiprobable quantile bins.
std::vector<int> coarse_grain(std::span<const double> y, int groups) {
    std::vector<double> v(y.begin(), y.end());
    std::vector<double> th(groups + 1);
    for (int i = 0; i <= groups; ++i) th[i] = c22_quantile(v, static_cast<double>(i) / groups);
    th[0] -= 1.0;
    std::vector<int> labels(y.size(), 0);
    for (int i = 0; i < groups; ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            if (y[j] > th[i] && y[j] <= th[i + 1]) labels[j] = i + 1;
    return labels;
}

struct Histogram {
    std::vector<int> counts;
    std::vector<double> edges;
};

Histogram histcounts(std::span<const double> y, int bins) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double step = (*hi - *lo) / bins;
    Histogram h{std::vector<int>(bins, 0), std::vector<double>(bins + 1)};
    for (double v : y) {
        int b = step > 0.0 ? static_cast<int>((v - *lo) / step) : 0;
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[b];
    }
    for (int i = 0; i <= bins; ++i) h.edges[i] = *lo + step * i;
    return h;
}

/// Centre of the most populated bin; ties go to the lowest bin.
double histogram_mode(std::span<const double> y, int bins) {
    const auto h = histcounts(y, bins);
    const auto it = std::max_element(h.counts.begin(), h.counts.end());
    const auto i = static_cast<std::size_t>(it - h.counts.begin());
    return 0.5 * (h.edges[i] + h.edges[i + 1]);
}

double binary_mean_longstretch1(std::span<const double> y) {
    const std::size_t n = y.size();
    const double m = stats::mean(y);
    int best = 0, last = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const bool zero = !(y[i] - m > 0.0);
        if (zero || i == n - 2) {
            best = std::max(best, static_cast<int>(i) - last);
            last = static_cast<int>(i);
        }
    }
    return best;
}

double binary_diff_longstretch0(std::span<const double> y) {
    const std::size_t n = y.size();
    int best = 0, last = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const bool one = !(y[i + 1] - y[i] < 0.0);
        if (one || i == n - 2) {
            best = std::max(best, static_cast<int>(i) - last);
            last = static_cast<int>(i);
        }
    }
    return best;
}

double outlier_include(std::span<const double> y, double sign) {
    const std::size_t n = y.size();
    constexpr double inc = 0.01;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = sign * y[i];
    if (std::all_of(w.begin(), w.end(), [&](double v) { return v == w[0]; })) return 0.0;
    double tot = 0.0;
    for (double v : w)
        if (v >= 0.0) tot += 1.0;
    const double max_val = *std::max_element(w.begin(), w.end());
    if (max_val < inc) return 0.0;
    const auto n_thresh = static_cast<std::size_t>(max_val / inc + 1.0);
    std::vector<double> mean_gap(n_thresh), pct(n_thresh), med(n_thresh);
    const double half = static_cast<double>(n / 2);
    std::vector<double> r;
    r.reserve(n);
    for (std::size_t j = 0; j < n_thresh; ++j) {
        r.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] >= static_cast<double>(j) * inc) r.push_back(static_cast<double>(i + 1));
        if (r.size() >= 2) {
            mean_gap[j] = (r.back() - r.front()) / static_cast<double>(r.size() - 1);
        } else {
            mean_gap[j] = kNaN;
        }
        pct[j] = (static_cast<double>(r.size()) - 1.0) * 100.0 / tot;
        med[j] = (r.empty() ? kNaN : stats::median(r)) / half - 1.0;
    }
    std::size_t mj = 0, fbi = n_thresh - 1;
    for (std::size_t i = 0; i < n_thresh; ++i)
        if (pct[i] > 2.0) mj = i;
    for (std::size_t i = n_thresh; i-- > 0;)
        if (std::isnan(mean_gap[i])) fbi = i;
    const std::size_t limit = std::min(mj, fbi);
    return stats::median(std::span<const double>(med).first(limit + 1));
}

double f1ecac(std::span<const double> ac) {
    const double th = 1.0 / std::numbers::e;
    for (std::size_t i = 0; i + 1 < ac.size(); ++i) {
        if ((ac[i] - th) * (ac[i + 1] - th) < 0.0) {
            const double slope = ac[i + 1] - ac[i];
            return static_cast<double>(i) + (th - ac[i]) / slope;
        }
    }
    return static_cast<double>(ac.size());
}

double first_min_ac(std::span<const double> ac) {
    for (std::size_t i = 1; i + 1 < ac.size(); ++i)
        if (ac[i] < ac[i - 1] && ac[i] < ac[i + 1]) return static_cast<double>(i);
    return static_cast<double>(ac.size());
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct Welch {
    double area_5_1 = 0.0;
    double centroid = 0.0;
};

/// Single full-length rectangular-window periodogram.
Welch welch_rect(std::span<const double> y) {
    const std::size_t n = y.size();
    const std::size_t nfft = next_pow2(n);
    const double m = stats::mean(y);
    std::vector<double> buf(nfft, 0.0);
    for (std::size_t i = 0; i < n; ++i) buf[i] = y[i] - m;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> f;
    fft.fwd(f, buf);
    const double kmu = static_cast<double>(n);  // one window, squared norm of ones
    const std::size_t nout = nfft / 2 + 1;
    std::vector<double> sw(nout);
    for (std::size_t i = 0; i < nout; ++i) {
        double p = std::norm(f[i]) / kmu;
        if (i > 0 && i + 1 < nout) p *= 2.0;
        sw[i] = p / (2.0 * std::numbers::pi);
    }
    const double dw = 2.0 * std::numbers::pi / static_cast<double>(nfft);
    Welch out;
    std::vector<double> cs(nout);
    std::partial_sum(sw.begin(), sw.end(), cs.begin());
    const double half = cs.back() * 0.5;
    for (std::size_t i = 0; i < nout; ++i) {
        if (cs[i] > half) {
            out.centroid = static_cast<double>(i) * dw;
            break;
        }
    }
    for (std::size_t i = 0; i < nout / 5; ++i) out.area_5_1 += sw[i];
    out.area_5_1 *= dw;
    return out;
}

std::vector<double> local_mean_residuals(std::span<const double> y, std::size_t train) {
    std::vector<double> res;
    if (y.size() <= train) return res;
    res.reserve(y.size() - train);
    for (std::size_t i = 0; i + train < y.size(); ++i)
        res.push_back(y[i + train] - stats::mean(y.subspan(i, train)));
    return res;
}

double trev_1_num(std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += std::pow(y[i + 1] - y[i], 3);
    return s / static_cast<double>(y.size() - 1);
}

double histogram_ami_even_2_5(std::span<const double> y) {
    constexpr std::size_t tau = 2;
    constexpr int bins = 5;
    if (y.size() <= tau) return kNaN;
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double step = (*hi - *lo + 0.2) / bins;
    std::array<double, bins + 1> edges;
    for (int i = 0; i <= bins; ++i) edges[i] = *lo + step * i - 0.1;
    auto bin_of = [&](double v) {
        for (int j = 0; j <= bins; ++j)
            if (v < edges[j]) return j - 1;
        return bins - 1;
    };
    std::array<std::array<double, bins>, bins> p{};
    const std::size_t n = y.size() - tau;
    for (std::size_t i = 0; i < n; ++i) p[bin_of(y[i])][bin_of(y[i + tau])] += 1.0;
    std::array<double, bins> pi{}, pj{};
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            p[i][j] /= static_cast<double>(n);
            pi[i] += p[i][j];
            pj[j] += p[i][j];
        }
    double ami = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j)
            if (p[i][j] > 0.0) ami += p[i][j] * std::log(p[i][j] / (pi[i] * pj[j]));
    return ami;
}

double ami_40_gaussian_fmmi(std::span<const double> y) {
    std::size_t tau = 40;
    const auto cap = static_cast<std::size_t>(std::ceil(static_cast<double>(y.size()) / 2.0));
    tau = std::min(tau, cap);
    std::vector<double> ami(tau);
    for (std::size_t i = 0; i < tau; ++i) {
        const double ac = autocorr_lag(y, i + 1);
        ami[i] = -0.5 * std::log(1.0 - ac * ac);
    }
    for (std::size_t i = 1; i + 1 < tau; ++i)
        if (ami[i] < ami[i - 1] && ami[i] < ami[i + 1]) return static_cast<double>(i);
    return static_cast<double>(tau);
}

double pnn40(std::span<const double> y) {
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i)
        if (std::abs(y[i + 1] - y[i]) * 1000.0 > 40.0) c += 1.0;
    return c / static_cast<double>(y.size() - 1);
}

double motif_three_hh(std::span<const double> y) {
    const std::size_t n = y.size();
    const auto yt = coarse_grain(y, 3);
    std::array<std::array<double, 3>, 3> counts{};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (yt[i] < 1 || yt[i + 1] < 1) continue;
        counts[yt[i] - 1][yt[i + 1] - 1] += 1.0;
    }
    double h = 0.0;
    for (const auto& row : counts)
        for (double c : row) {
            const double p = c / static_cast<double>(n - 1);
            if (p > 0.0) h -= p * std::log(p);
        }
    return h;
}

double local_mean1_tauresrat(std::span<const double> y) {
    const auto res = local_mean_residuals(y, 1);
    const double a = static_cast<double>(first_zero(res, res.size()));
    const double b = static_cast<double>(first_zero(y, y.size()));
    return a / b;
}

double embed2_expfit_meandiff(std::span<const double> y) {
    const std::size_t n = y.size();
    std::size_t tau = first_zero(y, n);
    if (static_cast<double>(tau) > static_cast<double>(n) / 10.0) tau = n / 10;
    if (n < tau + 2) return kNaN;
    const std::size_t nd = n - tau - 1;
    std::vector<double> d(nd);
    for (std::size_t i = 0; i < nd; ++i) {
        const double a = y[i + 1] - y[i];
        const double b = y[i + tau + 1] - y[i + tau];
        d[i] = std::sqrt(a * a + b * b);
    }
    const double l = stats::mean(d);
    const double sd = stats::stddev(d);
    if (sd < 0.001) return 0.0;
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    const int bins = static_cast<int>(
        std::ceil((*hi - *lo) / (3.5 * sd / std::pow(static_cast<double>(nd), 1.0 / 3.0))));
    if (bins <= 0) return 0.0;
    const auto h = histcounts(d, bins);
    double s = 0.0;
    for (int i = 0; i < bins; ++i) {
        const double centre = 0.5 * (h.edges[i] + h.edges[i + 1]);
        const double expf = std::max(0.0, std::exp(-centre / l) / l);
        s += std::abs(h.counts[i] / static_cast<double>(nd) - expf);
    }
    return s / bins;
}

stats::LineFit linreg(std::span<const double> x, std::span<const double> y) { return stats::fit_line(x, y); }

enum class Fluct { Dfa, RsRange };

double fluct_anal(std::span<const double> y, std::size_t lag, Fluct how) {
    const std::size_t n = y.size();
    constexpr int steps = 50;
    const double lin_low = std::log(5.0);
    const double lin_high = std::log(static_cast<double>(n / 2));
    const double step = (lin_high - lin_low) / (steps - 1);
    std::vector<std::size_t> tau(steps);
    for (int i = 0; i < steps; ++i)
        tau[i] = static_cast<std::size_t>(std::round(std::exp(lin_low + i * step)));
    tau.erase(std::unique(tau.begin(), tau.end()), tau.end());
    const std::size_t ntau = tau.size();
    if (ntau < 12) return 0.0;

    const std::size_t size_cs = n / lag;
    std::vector<double> cs(size_cs);
    cs[0] = y[0];
    for (std::size_t i = 0; i + 1 < size_cs; ++i) cs[i + 1] = cs[i] + y[(i + 1) * lag];

    std::vector<double> xreg(tau.back());
    for (std::size_t i = 0; i < xreg.size(); ++i) xreg[i] = static_cast<double>(i + 1);

    std::vector<double> logt(ntau), logf(ntau);
    std::vector<double> buf;
    for (std::size_t i = 0; i < ntau; ++i) {
        const std::size_t t = tau[i];
        const std::size_t nbuf = size_cs / t;
        double f = 0.0;
        buf.resize(t);
        for (std::size_t j = 0; j < nbuf; ++j) {
            std::copy_n(cs.begin() + static_cast<std::ptrdiff_t>(j * t), t, buf.begin());
            const auto fit = linreg(std::span<const double>(xreg).first(t), buf);
            for (std::size_t k = 0; k < t; ++k) buf[k] -= fit.slope * static_cast<double>(k + 1) + fit.intercept;
            if (how == Fluct::RsRange) {
                const auto [lo, hi] = std::minmax_element(buf.begin(), buf.end());
                f += (*hi - *lo) * (*hi - *lo);
            } else {
                for (double v : buf) f += v * v;
            }
        }
        f = how == Fluct::RsRange ? std::sqrt(f / static_cast<double>(nbuf))
                                  : std::sqrt(f / static_cast<double>(nbuf * t));
        logt[i] = std::log(static_cast<double>(t));
        logf[i] = std::log(f);
        if (!std::isfinite(logf[i])) return kNaN;
    }

    constexpr std::size_t min_points = 6;
    std::vector<double> sserr;
    for (std::size_t i = min_points; i <= ntau - min_points; ++i) {
        const auto f1 = linreg(std::span<const double>(logt).first(i), std::span<const double>(logf).first(i));
        const auto f2 = linreg(std::span<const double>(logt).subspan(i - 1), std::span<const double>(logf).subspan(i - 1));
        double e1 = 0.0, e2 = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            const double r = logt[j] * f1.slope + f1.intercept - logf[j];
            e1 += r * r;
        }
        for (std::size_t j = i - 1; j < ntau; ++j) {
            const double r = logt[j] * f2.slope + f2.intercept - logf[j];
            e2 += r * r;
        }
        sserr.push_back(std::sqrt(e1) + std::sqrt(e2));
    }
    const auto first_min = static_cast<std::size_t>(std::min_element(sserr.begin(), sserr.end()) - sserr.begin());
    return static_cast<double>(first_min + min_points) / static_cast<double>(ntau);
}

double transition_matrix_sumdiagcov(std::span<const double> y) {
    const std::size_t tau = first_zero(y, y.size());
    if (tau == 0) return kNaN;
    const std::size_t n = y.size();
    const std::size_t ndown = (n - 1) / tau + 1;
    std::vector<double> down(ndown);
    for (std::size_t i = 0; i < ndown; ++i) down[i] = y[i * tau];
    if (ndown < 2) return kNaN;
    const auto cg = coarse_grain(down, 3);
    std::array<std::array<double, 3>, 3> t{};
    for (std::size_t j = 0; j + 1 < ndown; ++j) {
        if (cg[j] < 1 || cg[j + 1] < 1) continue;
        t[cg[j] - 1][cg[j + 1] - 1] += 1.0;
    }
    double s = 0.0;
    for (int col = 0; col < 3; ++col) {
        std::array<double, 3> c;
        for (int row = 0; row < 3; ++row) c[row] = t[row][col] / static_cast<double>(ndown - 1);
        s += stats::variance(c);
    }
    return s;
}

/// Least-squares cubic spline with a single interior knot.
std::vector<double> spline_trend(std::span<const double> y) {
    const std::size_t n = y.size();
    const double knot = std::floor(static_cast<double>(n) / 2.0) - 1.0;
    Eigen::MatrixXd a(n, 5);
    Eigen::VectorXd b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        const double u = std::max(0.0, t - knot);
        a.row(static_cast<Eigen::Index>(i)) << 1.0, t, t * t, t * t * t, u * u * u;
        b(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd fit = a * coef;
    return {fit.data(), fit.data() + n};
}

double periodicity_wang(std::span<const double> y) {
    constexpr double th = 0.01;
    const std::size_t n = y.size();
    const auto trend = spline_trend(y);
    std::vector<double> sub(n);
    for (std::size_t i = 0; i < n; ++i) sub[i] = y[i] - trend[i];
    const auto acmax = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / 3.0));
    std::vector<double> ac(acmax);
    for (std::size_t lag = 1; lag <= acmax; ++lag) ac[lag - 1] = autocov_lag(sub, lag);

    std::vector<std::size_t> troughs, peaks;
    for (std::size_t i = 1; i + 1 < acmax; ++i) {
        const double in = ac[i] - ac[i - 1], out = ac[i + 1] - ac[i];
        if (in < 0.0 && out > 0.0) troughs.push_back(i);
        else if (in > 0.0 && out < 0.0) peaks.push_back(i);
    }
    for (std::size_t p : peaks) {
        std::ptrdiff_t j = -1;
        while (j + 1 < static_cast<std::ptrdiff_t>(troughs.size()) && troughs[static_cast<std::size_t>(j + 1)] < p) ++j;
        if (j < 0) continue;
        const double trough = ac[troughs[static_cast<std::size_t>(j)]];
        if (ac[p] - trough < th) continue;
        if (ac[p] < 0.0) continue;
        return static_cast<double>(p + 1);  // acf entry p holds lag p + 1
    }
    return 0.0;
}

} // namespace

void catch22_block(std::span<const double> x, FeatureArray& out) {
    const auto y = zscore(x);
    const auto ac = autocorrs(y);
    const auto w = welch_rect(y);

    out[idx::histogram_mode5] = histogram_mode(y, 5);
    out[idx::histogram_mode10] = histogram_mode(y, 10);
    out[idx::binary_mean_longstretch1] = binary_mean_longstretch1(y);
    out[idx::outlier_p] = outlier_include(y, 1.0);
    out[idx::outlier_n] = outlier_include(y, -1.0);
    out[idx::f1ecac] = f1ecac(ac);
    out[idx::firstmin_ac] = first_min_ac(ac);
    out[idx::welch_area_5_1] = w.area_5_1;
    out[idx::welch_centroid] = w.centroid;
    out[idx::local_mean3_stderr] = stats::stddev(local_mean_residuals(y, 3));
    out[idx::trev_1_num] = trev_1_num(y);
    out[idx::histogram_ami_2_5] = histogram_ami_even_2_5(y);
    out[idx::ami_40_fmmi] = ami_40_gaussian_fmmi(y);
    out[idx::pnn40] = pnn40(y);
    out[idx::binary_diff_longstretch0] = binary_diff_longstretch0(y);
    out[idx::motif_three_hh] = motif_three_hh(y);
    out[idx::local_mean1_tauresrat] = local_mean1_tauresrat(y);
    out[idx::embed2_expfit_meandiff] = embed2_expfit_meandiff(y);
    out[idx::fluct_dfa] = fluct_anal(y, 2, Fluct::Dfa);
    out[idx::fluct_rsrange] = fluct_anal(y, 1, Fluct::RsRange);
    out[idx::transition_matrix_sumdiagcov] = transition_matrix_sumdiagcov(y);
    out[idx::periodicity_wang] = periodicity_wang(y);
}

} // namespace etsfs::features
