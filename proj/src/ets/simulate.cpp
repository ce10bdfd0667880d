#include <algorithm>
#include <cmath>

#include "etsfs/core/error.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/ets/model.hpp"
#include "recursion.hpp"

namespace etsfs::ets {

namespace {

void require(bool ok, const EtsSpec& spec, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidParams, spec.code() + ": " + what);
}

} // namespace

void EtsParams::validate(const EtsSpec& spec) const {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, spec, "alpha must lie in (0, 1)");
    require(std::isfinite(level0), spec, "level0 must be finite");

    require(beta.has_value() == spec.has_trend(), spec,
            spec.has_trend() ? "beta required" : "beta given for a model without trend");
    require(trend0.has_value() == spec.has_trend(), spec,
            spec.has_trend() ? "trend0 required" : "trend0 given for a model without trend");
    if (spec.has_trend()) {
        require(*beta > 0.0 && *beta < alpha, spec, "beta must lie in (0, alpha)");
        require(std::isfinite(*trend0), spec, "trend0 must be finite");
    }

    require(phi.has_value() == spec.damped(), spec,
            spec.damped() ? "phi required" : "phi given for an undamped model");
    if (spec.damped())
        require(*phi >= kPhiLower && *phi <= kPhiUpper, spec, "phi must lie in [0.80, 0.98]");

    require(gamma.has_value() == spec.seasonal(), spec,
            spec.seasonal() ? "gamma required" : "gamma given for a non-seasonal model");
    if (!spec.seasonal()) {
        require(seasonal0.empty(), spec, "seasonal states given for a non-seasonal model");
        return;
    }
    require(*gamma > 0.0 && *gamma < 1.0 - alpha, spec, "gamma must lie in (0, 1 - alpha)");
    require(seasonal0.size() == static_cast<std::size_t>(spec.period()), spec,
            "expected one seasonal state per period");
    double sum = 0.0, abs_sum = 0.0;
    for (double s : seasonal0) {
        require(std::isfinite(s), spec, "seasonal states must be finite");
        sum += s;
        abs_sum += std::abs(s);
    }
    const double m = static_cast<double>(spec.period());
    if (spec.season() == SeasonForm::Additive) {
        require(std::abs(sum) <= 1e-8 * (1.0 + abs_sum), spec, "additive seasonal states must sum to 0");
    } else {
        for (double s : seasonal0) require(s > 0.0, spec, "multiplicative seasonal states must be positive");
        require(std::abs(sum / m - 1.0) <= 1e-8, spec, "multiplicative seasonal states must average 1");
    }
}

TimeSeries simulate(const EtsSpec& spec, const EtsParams& params, std::size_t n, double noise_sd,
                    std::uint64_t seed, std::string id) {
    params.validate(spec);
    if (!(noise_sd > 0.0) || !std::isfinite(noise_sd))
        throw Error(ErrorCode::InvalidArgument, "noise_sd must be positive");
    if (n < 2 * static_cast<std::size_t>(spec.period()) || n < 2)
        throw Error(ErrorCode::InvalidArgument, "simulation length must be at least two periods");

    const auto sm = detail::smoothing_of(params);
    auto st = detail::initial_state(spec, params);
    Rng rng(seed);
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double mu = detail::one_step_mean(spec, sm, st);
        const double eps = rng.normal(0.0, noise_sd);
        y[t] = spec.error() == ErrorForm::Additive ? mu + eps : mu * (1.0 + eps);
        detail::advance(spec, sm, st, y[t]);
    }
    if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); }))
        throw Error(ErrorCode::InvalidParams, spec.code() + ": simulated path diverged");
    return TimeSeries(std::move(id), spec.period(), std::move(y));
}

} // namespace etsfs::ets
