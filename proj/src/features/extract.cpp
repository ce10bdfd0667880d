#include <cmath>
#include <limits>

#include "etsfs/core/error.hpp"
#include "etsfs/core/stats.hpp"
#include "etsfs/features/features.hpp"
#include "index.hpp"

namespace etsfs::features {

std::vector<double> zscore(std::span<const double> x) {
    const double m = stats::mean(x);
    const double sd = stats::stddev(x);
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = sd > 0.0 ? (x[i] - m) / sd : 0.0;
    return z;
}

std::size_t min_length(int period) {
    return std::max<std::size_t>(8, 3 * static_cast<std::size_t>(std::max(period, 1)));
}

FeatureVector extract(const TimeSeries& series) {
    const int period = series.period();
    if (series.size() < min_length(period))
        throw Error(ErrorCode::SeriesTooShort,
                    series.id() + ": feature extraction needs at least " +
                        std::to_string(min_length(period)) + " observations");

    const auto z = zscore(series.values());
    FeatureArray raw;
    raw.fill(std::numeric_limits<double>::quiet_NaN());

    acf_block(z, period, raw);
    stl_block(z, period, raw);
    stationarity_block(z, period, raw);
    catch22_block(z, raw);
    raw[idx::series_length] = static_cast<double>(series.size());

    FeatureVector fv;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (std::isfinite(raw[i])) {
            fv.values[i] = raw[i];
        } else {
            fv.values[i] = 0.0;
            fv.sanitized.push_back(i);
        }
    }
    return fv;
}

void acf_block(std::span<const double> x, int period, FeatureArray& out) {
    auto sum_sq = [](const std::vector<double>& v, std::size_t k) {
        double s = 0.0;
        for (std::size_t i = 0; i < std::min(k, v.size()); ++i) s += v[i] * v[i];
        return s;
    };
    const auto d1 = stats::diff(x);
    const auto d2 = stats::diff(d1);
    const std::size_t m = static_cast<std::size_t>(std::max(period, 1));

    const auto a0 = stats::acf(x, std::max<std::size_t>(10, m));
    const auto a1 = stats::acf(d1, 10);
    const auto a2 = stats::acf(d2, 10);
    out[idx::x_acf1] = a0[0];
    out[idx::x_acf10] = sum_sq(a0, 10);
    out[idx::diff1_acf1] = a1[0];
    out[idx::diff1_acf10] = sum_sq(a1, 10);
    out[idx::diff2_acf1] = a2[0];
    out[idx::diff2_acf10] = sum_sq(a2, 10);
    out[idx::seas_acf1] = m > 1 ? a0[m - 1] : 0.0;

    const auto p0 = stats::pacf(x, std::max<std::size_t>(5, m));
    out[idx::x_pacf5] = sum_sq(p0, 5);
    out[idx::diff1x_pacf5] = sum_sq(stats::pacf(d1, 5), 5);
    out[idx::diff2x_pacf5] = sum_sq(stats::pacf(d2, 5), 5);
    out[idx::seas_pacf] = m > 1 ? p0[m - 1] : 0.0;
}

} // namespace etsfs::features
