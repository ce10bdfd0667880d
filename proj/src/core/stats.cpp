#include "etsfs/core/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "etsfs/core/error.hpp"

namespace etsfs::stats {

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

double quantile(std::span<const double> x, double p) {
    if (x.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

std::vector<double> diff(std::span<const double> x, std::size_t lag) {
    if (x.size() <= lag) return {};
    std::vector<double> out(x.size() - lag);
    for (std::size_t i = lag; i < x.size(); ++i) out[i - lag] = x[i] - x[i - lag];
    return out;
}

std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
    std::vector<double> r(max_lag, 0.0);
    const std::size_t n = x.size();
    if (n == 0) return r;
    const double m = mean(x);
    double c0 = 0.0;
    for (double v : x) c0 += (v - m) * (v - m);
    if (!(c0 > 0.0)) return r;
    for (std::size_t k = 1; k <= max_lag && k < n; ++k) {
        double ck = 0.0;
        for (std::size_t t = k; t < n; ++t) ck += (x[t] - m) * (x[t - k] - m);
        r[k - 1] = ck / c0;
    }
    return r;
}

std::vector<double> pacf(std::span<const double> x, std::size_t max_lag) {
    const auto r = acf(x, max_lag);
    std::vector<double> out(max_lag, 0.0);
    std::vector<double> phi(max_lag + 1, 0.0), prev(max_lag + 1, 0.0);
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = r[k - 1];
        double den = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            num -= prev[j] * r[k - j - 1];
            den -= prev[j] * r[j - 1];
        }
        const double pkk = std::abs(den) > 1e-300 ? num / den : 0.0;
        phi[k] = pkk;
        for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - pkk * prev[k - j];
        out[k - 1] = pkk;
        prev = phi;
    }
    return out;
}

double correlation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 2) return 0.0;
    const double ma = mean(a.first(n)), mb = mean(b.first(n));
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

OlsResult ols(std::span<const double> y, const std::vector<std::vector<double>>& design,
              bool intercept) {
    const auto n = static_cast<Eigen::Index>(y.size());
    const auto p = static_cast<Eigen::Index>(design.size() + (intercept ? 1 : 0));
    Eigen::MatrixXd a(n, p);
    Eigen::Index col = 0;
    if (intercept) a.col(col++).setOnes();
    for (const auto& column : design) {
        if (static_cast<Eigen::Index>(column.size()) != n)
            throw Error(ErrorCode::DimensionMismatch, "ols regressor length differs from response");
        a.col(col++) = Eigen::Map<const Eigen::VectorXd>(column.data(), n);
    }
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(yv);
    const Eigen::VectorXd res = yv - a * beta;

    OlsResult out;
    out.coef.assign(beta.data(), beta.data() + beta.size());
    out.residuals.assign(res.data(), res.data() + res.size());
    out.rss = res.squaredNorm();
    const double ybar = yv.mean();
    const double tss = intercept ? (yv.array() - ybar).square().sum() : yv.squaredNorm();
    out.r_squared = tss > 0.0 ? 1.0 - out.rss / tss : 0.0;
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    LineFit f;
    if (n == 0) return f;
    const double mx = mean(x.first(n)), my = mean(y.first(n));
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    return f;
}

} // namespace etsfs::stats
