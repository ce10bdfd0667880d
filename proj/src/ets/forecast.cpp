#include <algorithm>
#include <cmath>

#include "etsfs/core/error.hpp"
#include "etsfs/core/rng.hpp"
#include "etsfs/core/stats.hpp"
#include "etsfs/ets/model.hpp"
#include "recursion.hpp"

namespace etsfs::ets {

Forecast forecast(const FittedEts& model, std::size_t h, double confidence, std::size_t n_paths,
                  std::uint64_t seed) {
    if (h == 0) throw Error(ErrorCode::InvalidArgument, "forecast horizon must be positive");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw Error(ErrorCode::InvalidArgument, "confidence must lie in (0, 1)");
    if (n_paths == 0) throw Error(ErrorCode::InvalidArgument, "n_paths must be positive");

    const auto& spec = model.spec;
    const auto sm = detail::smoothing_of(model.params);

    Forecast fc;
    fc.alpha_level = 1.0 - confidence;
    fc.point.resize(h);
    {
        EtsState st = model.final_state;
        for (std::size_t k = 0; k < h; ++k) {
            const double mu = detail::one_step_mean(spec, sm, st);
            fc.point[k] = mu;
            detail::advance(spec, sm, st, mu);
        }
    }

    const double sd = std::sqrt(std::max(model.sigma2, 0.0));
    std::vector<std::vector<double>> draws(h);
    for (auto& d : draws) d.reserve(n_paths);
    Rng rng(seed);
    for (std::size_t p = 0; p < n_paths; ++p) {
        EtsState st = model.final_state;
        for (std::size_t k = 0; k < h; ++k) {
            const double mu = detail::one_step_mean(spec, sm, st);
            const double eps = rng.normal(0.0, 1.0) * sd;
            const double y = spec.error() == ErrorForm::Additive ? mu + eps : mu * (1.0 + eps);
            if (std::isfinite(y)) draws[k].push_back(y);
            detail::advance(spec, sm, st, y);
        }
    }

    const double lo = (1.0 - confidence) / 2.0;
    fc.lower.resize(h);
    fc.upper.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        if (draws[k].empty()) {
            fc.lower[k] = fc.upper[k] = fc.point[k];
            continue;
        }
        fc.lower[k] = stats::quantile(draws[k], lo);
        fc.upper[k] = stats::quantile(draws[k], 1.0 - lo);
    }
    return fc;
}

double criterion_value(const FittedEts& model, Criterion criterion) {
    switch (criterion) {
    case Criterion::AIC: return model.aic;
    case Criterion::AICc: return model.aicc;
    case Criterion::BIC: return model.bic;
    }
    return model.aicc;
}

IcSelection rank_by_ic(const TimeSeries& series, Criterion criterion, const FitOptions& options) {
    std::vector<IcCandidate> candidates;
    const bool nonpositive = series.has_nonpositive();
    const FittedEts* best = nullptr;
    for (const auto& spec : applicable_specs(series.period())) {
        IcCandidate c{.spec = spec};
        if (spec.needs_positive_data() && nonpositive) {
            c.skipped_reason = "non-positive data";
        } else if (series.size() < static_cast<std::size_t>(spec.n_params() + 4)) {
            c.skipped_reason = "series too short";
        } else {
            c.fit = fit(series, spec, options);
            if (!std::isfinite(criterion_value(*c.fit, criterion))) {
                c.skipped_reason = "no admissible parameters";
                c.fit.reset();
            }
        }
        candidates.push_back(std::move(c));
    }
    // pointers taken after the vector stops growing
    for (const auto& c : candidates) {
        if (!c.fit) continue;
        if (best == nullptr) {
            best = &*c.fit;
            continue;
        }
        const double v = criterion_value(*c.fit, criterion);
        const double b = criterion_value(*best, criterion);
        // candidates arrive in taxonomy order, so keeping the incumbent on a
        // full tie realises the taxonomy-order rule
        if (v < b || (v == b && c.fit->n_params < best->n_params)) best = &*c.fit;
    }
    if (best == nullptr)
        throw Error(ErrorCode::NoFeasibleModel, series.id() + ": no applicable ETS model can be fitted");
    IcSelection out{.best = *best, .candidates = {}};
    out.candidates = std::move(candidates);
    return out;
}

} // namespace etsfs::ets
