#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "etsfs/core/error.hpp"
#include "etsfs/core/nelder_mead.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/core/stats.hpp"
#include "etsfs/ets/model.hpp"
#include "recursion.hpp"

namespace etsfs::ets {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinVariance = 1e-300;
constexpr double kLogitClamp = 25.0;

double logistic(double x) {
    x = std::clamp(x, -kLogitClamp, kLogitClamp);
    return 1.0 / (1.0 + std::exp(-x));
}

double logit(double p) {
    p = std::clamp(p, 1e-10, 1.0 - 1e-10);
    return std::log(p / (1.0 - p));
}

struct FilterResult {
    double neg2_loglik = kInf;
    double sse = 0.0;
    std::vector<double> fitted;
    std::vector<double> residuals;
    EtsState final_state;
};

/// Runs the innovations filter and returns -2 log-likelihood (Gaussian,
/// with the sum-of-log|mu| term for multiplicative errors). Infeasible
/// trajectories yield +inf.
FilterResult run_filter(const EtsSpec& spec, const EtsParams& p, std::span<const double> y,
                        bool keep_paths) {
    FilterResult out;
    const auto sm = detail::smoothing_of(p);
    auto st = detail::initial_state(spec, p);
    const std::size_t n = y.size();
    if (keep_paths) {
        out.fitted.resize(n);
        out.residuals.resize(n);
    }
    const bool mult_error = spec.error() == ErrorForm::Multiplicative;
    const bool mult_season = spec.season() == SeasonForm::Multiplicative;
    double sse = 0.0, log_sum = 0.0;
    bool feasible = true;
    for (std::size_t t = 0; t < n; ++t) {
        if (mult_season) {
            const double q = detail::base_level(spec, sm, st);
            if (!(q > 0.0) || !(st.season[st.phase] > 0.0)) feasible = false;
        }
        const double mu = detail::one_step_mean(spec, sm, st);
        if (!std::isfinite(mu) || (mult_error && !(mu > 0.0))) feasible = false;
        if (!feasible && !keep_paths) return out;

        const double e = mult_error ? (y[t] - mu) / mu : y[t] - mu;
        sse += e * e;
        if (mult_error && mu > 0.0) log_sum += std::log(mu);
        if (keep_paths) {
            out.fitted[t] = mu;
            out.residuals[t] = e;
        }
        detail::advance(spec, sm, st, y[t]);
    }
    out.sse = sse;
    out.final_state = std::move(st);
    if (!feasible || !std::isfinite(sse) || !std::isfinite(log_sum)) return out;
    const double nd = static_cast<double>(n);
    const double sigma2 = std::max(sse / nd, kMinVariance);
    out.neg2_loglik = nd * std::log(2.0 * std::numbers::pi * sigma2) + nd + 2.0 * log_sum;
    return out;
}

/// Maps an unconstrained vector onto admissible parameters. Layout:
/// alpha, [beta, [phi]], [gamma], level0, [trend0], [m - 1 seasonal states].
class Transform {
public:
    Transform(const EtsSpec& spec, const EtsParams& start, double scale)
        : spec_(spec), start_(start), scale_(scale) {}

    std::size_t size() const {
        std::size_t k = 2;
        if (spec_.has_trend()) k += 2;
        if (spec_.damped()) k += 1;
        if (spec_.seasonal()) k += 1 + static_cast<std::size_t>(spec_.period() - 1);
        return k;
    }

    std::vector<double> encode(const EtsParams& p) const {
        std::vector<double> x;
        x.reserve(size());
        x.push_back(logit(p.alpha));
        if (spec_.has_trend()) {
            x.push_back(logit(*p.beta / p.alpha));
            if (spec_.damped()) x.push_back(logit((*p.phi - kPhiLower) / (kPhiUpper - kPhiLower)));
        }
        if (spec_.seasonal()) x.push_back(logit(*p.gamma / (1.0 - p.alpha)));
        x.push_back((p.level0 - start_.level0) / scale_);
        if (spec_.has_trend()) x.push_back((*p.trend0 - *start_.trend0) / scale_);
        if (spec_.seasonal()) {
            const auto m = static_cast<std::size_t>(spec_.period());
            if (spec_.season() == SeasonForm::Additive) {
                for (std::size_t j = 0; j + 1 < m; ++j) x.push_back(p.seasonal0[j] / scale_);
            } else {
                const double last = std::log(p.seasonal0[m - 1]);
                for (std::size_t j = 0; j + 1 < m; ++j) x.push_back(std::log(p.seasonal0[j]) - last);
            }
        }
        return x;
    }

    EtsParams decode(std::span<const double> x) const {
        EtsParams p;
        std::size_t i = 0;
        p.alpha = logistic(x[i++]);
        if (spec_.has_trend()) {
            p.beta = p.alpha * logistic(x[i++]);
            if (spec_.damped()) p.phi = kPhiLower + (kPhiUpper - kPhiLower) * logistic(x[i++]);
        }
        if (spec_.seasonal()) p.gamma = (1.0 - p.alpha) * logistic(x[i++]);
        p.level0 = start_.level0 + scale_ * x[i++];
        if (spec_.has_trend()) p.trend0 = *start_.trend0 + scale_ * x[i++];
        if (spec_.seasonal()) {
            const auto m = static_cast<std::size_t>(spec_.period());
            p.seasonal0.resize(m);
            if (spec_.season() == SeasonForm::Additive) {
                double sum = 0.0;
                for (std::size_t j = 0; j + 1 < m; ++j) {
                    p.seasonal0[j] = scale_ * x[i++];
                    sum += p.seasonal0[j];
                }
                p.seasonal0[m - 1] = -sum;
            } else {
                double sum = 0.0;
                for (std::size_t j = 0; j + 1 < m; ++j) {
                    p.seasonal0[j] = std::exp(std::clamp(x[i++], -30.0, 30.0));
                    sum += p.seasonal0[j];
                }
                p.seasonal0[m - 1] = 1.0;
                sum += 1.0;
                for (double& s : p.seasonal0) s *= static_cast<double>(m) / sum;
            }
        }
        return p;
    }

    std::vector<double> steps() const {
        std::vector<double> s;
        s.push_back(0.5);
        if (spec_.has_trend()) {
            s.push_back(0.5);
            if (spec_.damped()) s.push_back(0.5);
        }
        if (spec_.seasonal()) s.push_back(0.5);
        s.push_back(0.1);
        if (spec_.has_trend()) s.push_back(0.01);
        if (spec_.seasonal()) {
            const double step = spec_.season() == SeasonForm::Additive ? 0.1 : 0.05;
            s.insert(s.end(), static_cast<std::size_t>(spec_.period() - 1), step);
        }
        return s;
    }

private:
    const EtsSpec& spec_;
    EtsParams start_;
    double scale_;
};

void check_fit_preconditions(const TimeSeries& series, const EtsSpec& spec) {
    if (spec.seasonal() && spec.period() != series.period())
        throw Error(ErrorCode::InvalidSpec, spec.code() + " period does not match series " + series.id());
    const auto need = static_cast<std::size_t>(spec.n_params() + 4);
    if (series.size() < need)
        throw Error(ErrorCode::TooShort, series.id() + ": " + spec.code() + " needs " +
                                             std::to_string(need) + " observations, got " +
                                             std::to_string(series.size()));
    if (spec.needs_positive_data() && series.has_nonpositive())
        throw Error(ErrorCode::NonPositiveData,
                    series.id() + ": " + spec.code() + " requires strictly positive data");
}

FittedEts assemble(const TimeSeries& series, const EtsSpec& spec, const EtsParams& params,
                   FilterResult&& fr) {
    FittedEts out{.spec = spec, .params = params};
    const double n = static_cast<double>(series.size());
    out.fitted = std::move(fr.fitted);
    out.residuals = std::move(fr.residuals);
    out.sigma2 = fr.sse / n;
    out.final_state = std::move(fr.final_state);
    out.n_params = spec.n_params();
    const double k = out.n_params;
    out.log_likelihood = -0.5 * fr.neg2_loglik;
    out.aic = fr.neg2_loglik + 2.0 * k;
    out.aicc = out.aic + 2.0 * k * (k + 1.0) / (n - k - 1.0);
    out.bic = fr.neg2_loglik + k * std::log(n);
    return out;
}

} // namespace

EtsParams heuristic_params(const TimeSeries& series, const EtsSpec& spec) {
    const auto& y = series.values();
    const std::size_t n = y.size();
    const auto m = static_cast<std::size_t>(spec.seasonal() ? spec.period() : 1);

    std::size_t w = std::max<std::size_t>(10, 2 * m);
    if (m > 1) w = ((w + m - 1) / m) * m;
    if (w > n) w = m > 1 && n >= m ? (n / m) * m : n;
    const std::span<const double> window(y.data(), w);

    double mean = stats::mean(window);
    double slope = 0.0;
    if (m > 1 && w >= 2 * m) {
        slope = (stats::mean(window.subspan(m, m)) - stats::mean(window.first(m))) / static_cast<double>(m);
    } else if (w >= 2) {
        slope = (window[w - 1] - window[0]) / static_cast<double>(w - 1);
    }
    const double centre = (static_cast<double>(w) - 1.0) / 2.0;

    EtsParams p;
    p.alpha = 0.3;
    if (spec.has_trend()) {
        p.beta = 0.1 * p.alpha;
        p.trend0 = slope;
        if (spec.damped()) p.phi = 0.9;
    }
    // level just before the first observation
    p.level0 = spec.has_trend() ? mean - slope * (centre + 1.0) : mean;

    if (spec.seasonal()) {
        p.gamma = 0.1 * (1.0 - p.alpha);
        std::vector<double> sums(m, 0.0), counts(m, 0.0);
        const bool mult = spec.season() == SeasonForm::Multiplicative;
        for (std::size_t t = 0; t < w; ++t) {
            const double base = mean + slope * (static_cast<double>(t) - centre);
            double d;
            if (mult) d = base > 0.0 ? y[t] / base : (mean > 0.0 ? y[t] / mean : 1.0);
            else d = y[t] - base;
            sums[t % m] += d;
            counts[t % m] += 1.0;
        }
        p.seasonal0.resize(m);
        for (std::size_t j = 0; j < m; ++j)
            p.seasonal0[j] = counts[j] > 0.0 ? sums[j] / counts[j] : (mult ? 1.0 : 0.0);
        if (mult) {
            for (double& s : p.seasonal0) s = std::max(s, 1e-2);
            const double avg = stats::mean(p.seasonal0);
            for (double& s : p.seasonal0) s /= avg;
        } else {
            const double avg = stats::mean(p.seasonal0);
            for (double& s : p.seasonal0) s -= avg;
        }
    }
    return p;
}

FittedEts evaluate(const TimeSeries& series, const EtsSpec& spec, const EtsParams& params) {
    params.validate(spec);
    check_fit_preconditions(series, spec);
    auto fr = run_filter(spec, params, series.values(), true);
    return assemble(series, spec, params, std::move(fr));
}

FittedEts fit(const TimeSeries& series, const EtsSpec& spec, const FitOptions& options) {
    check_fit_preconditions(series, spec);
    const auto& y = series.values();

    const EtsParams start = heuristic_params(series, spec);
    double scale = stats::stddev(y);
    if (!(scale > 0.0)) scale = std::max(std::abs(stats::mean(y)), 1.0);
    const Transform transform(spec, start, scale);

    auto objective = [&](std::span<const double> x) {
        return run_filter(spec, transform.decode(x), y, false).neg2_loglik;
    };

    NelderMeadOptions nm;
    nm.max_evaluations = options.max_evaluations;
    nm.diameter_tol = options.diameter_tol;
    nm.rel_tol = options.rel_tol;
    const auto steps = transform.steps();

    const std::vector<double> x0 = transform.encode(start);
    const double start_value = objective(x0);
    auto best = nelder_mead(objective, x0, nm, steps);
    int evaluations = best.evaluations + 1;

    Rng jitter(mix_seed(0x5eed, spec.taxonomy_index()));
    for (int r = 0; r < options.restarts; ++r) {
        std::vector<double> xr = best.x;
        for (double& v : xr) v += jitter.normal(0.0, 0.3);
        auto run = nelder_mead(objective, xr, nm, steps);
        evaluations += run.evaluations;
        if (run.value < best.value) best = std::move(run);
    }

    const bool improved = best.value < start_value;
    const EtsParams params = improved ? transform.decode(best.x) : start;
    auto fr = run_filter(spec, params, y, true);
    FittedEts out = assemble(series, spec, params, std::move(fr));
    out.degraded = !improved;
    out.evaluations = evaluations;
    return out;
}

} // namespace etsfs::ets
