#include <algorithm>
#include <chrono>

#include <json.hpp>

#include "etsfs/core/error.hpp"
#include "etsfs/selector/selector.hpp"

namespace etsfs::selector {

using ets::ErrorForm;
using ets::EtsSpec;
using ets::SeasonForm;
using ets::TrendForm;

namespace {

struct Triple {
    ErrorForm e;
    TrendForm t;
    SeasonForm s;

    std::string code() const {
        return std::string(ets::code(e)) + std::string(ets::code(t)) + std::string(ets::code(s));
    }
};

template <std::size_t K>
int argmax(const std::array<double, K>& p) {
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double p_of(const ComponentPrediction& p, ErrorForm e) { return p.p_error[static_cast<std::size_t>(error_label(e))]; }
double p_of(const ComponentPrediction& p, TrendForm t) { return p.p_trend[static_cast<std::size_t>(trend_label(t))]; }
double p_of(const ComponentPrediction& p, SeasonForm s) {
    return p.p_season[static_cast<std::size_t>(season_label(s))];
}

/// Best applicable (error, season) pair at the current trend by the product
/// of component probabilities; ties follow taxonomy order.
void best_applicable_pair(const ComponentPrediction& p, int period, Triple& cur) {
    double best = -1.0;
    Triple pick = cur;
    for (ErrorForm e : {ErrorForm::Additive, ErrorForm::Multiplicative}) {
        for (SeasonForm s : {SeasonForm::None, SeasonForm::Additive, SeasonForm::Multiplicative}) {
            if (!EtsSpec::applicable(e, s)) continue;
            if (period == 1 && s != SeasonForm::None) continue;
            const double v = p_of(p, e) * p_of(p, cur.t) * p_of(p, s);
            if (v > best) {
                best = v;
                pick = {e, cur.t, s};
            }
        }
    }
    cur = pick;
}

} // namespace

std::pair<EtsSpec, AdjustmentLog> check_and_adjust(const ComponentPrediction& pred, int period, bool has_nonpositive,
                                                   std::size_t length) {
    if (period < 1) throw Error(ErrorCode::InvalidArgument, "period must be positive");
    Triple cur{error_form(argmax(pred.p_error)), trend_form(argmax(pred.p_trend)),
               season_form(argmax(pred.p_season))};
    AdjustmentLog log;
    log.initial = cur.code();
    auto record = [&](int check, const Triple& before) {
        if (before.code() != cur.code()) log.steps.push_back({check, before.code(), cur.code()});
    };

    // Check 1: no seasonality for non-seasonal data
    if (period == 1 && cur.s != SeasonForm::None) {
        const Triple before = cur;
        cur.s = SeasonForm::None;
        record(1, before);
    }
    // Check 2: inapplicable triple
    if (!EtsSpec::applicable(cur.e, cur.s)) {
        const Triple before = cur;
        best_applicable_pair(pred, period, cur);
        record(2, before);
    }
    // Check 3: multiplicative error needs positive data
    if (has_nonpositive && cur.e == ErrorForm::Multiplicative) {
        const Triple before = cur;
        cur.e = ErrorForm::Additive;
        if (!EtsSpec::applicable(cur.e, cur.s)) {
            // remaining forms are A and N; ties keep class order
            const bool additive = period > 1 && p_of(pred, SeasonForm::Additive) >= p_of(pred, SeasonForm::None);
            cur.s = additive ? SeasonForm::Additive : SeasonForm::None;
        }
        record(3, before);
    }
    // Check 4: a damped trend needs more than n_params + 4 observations
    if (cur.t == TrendForm::Damped &&
        length <= static_cast<std::size_t>(EtsSpec(cur.e, cur.t, cur.s, period).n_params() + 4)) {
        const Triple before = cur;
        // second-ranked trend; on ties N ranks above A
        cur.t = p_of(pred, TrendForm::Additive) > p_of(pred, TrendForm::None) ? TrendForm::Additive : TrendForm::None;
        if (!EtsSpec::applicable(cur.e, cur.s)) best_applicable_pair(pred, period, cur);
        record(4, before);
    }
    EtsSpec spec(cur.e, cur.t, cur.s, period);
    log.final_spec = spec.code();
    return {spec, log};
}

std::string AdjustmentLog::to_json() const {
    nlohmann::json j;
    j["id"] = id;
    j["initial"] = initial;
    j["final"] = final_spec;
    auto checks = nlohmann::json::array();
    for (const auto& s : steps) checks.push_back({{"check", s.check}, {"before", s.before}, {"after", s.after}});
    j["checks"] = checks;
    j["degraded_fit"] = degraded_fit;
    j["length_fallback"] = length_fallback ? nlohmann::json(*length_fallback) : nlohmann::json(nullptr);
    return j.dump();
}

namespace {

/// Progressively simpler variants tried when the series is too short for the
/// selected spec.
std::vector<EtsSpec> simpler_variants(const EtsSpec& s) {
    const int m = s.period();
    std::vector<EtsSpec> out;
    if (s.damped()) out.emplace_back(s.error(), TrendForm::Additive, s.season(), m);
    if (s.has_trend()) out.emplace_back(s.error(), TrendForm::None, s.season(), m);
    if (s.seasonal()) {
        out.emplace_back(s.error(), s.trend(), SeasonForm::None, m);
        out.emplace_back(s.error(), TrendForm::None, SeasonForm::None, m);
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

Selection select_and_forecast(const SelectorModel& model, const TimeSeries& series, std::size_t h, double confidence,
                              std::uint64_t seed, std::size_t n_paths) {
    auto t0 = std::chrono::steady_clock::now();
    const auto fv = features::extract(series);
    const double extract_seconds = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto pred = predict_components(model, fv);
    auto [spec, log] = check_and_adjust(pred, series.period(), series.has_nonpositive(), series.size());
    log.id = series.id();

    std::optional<ets::FittedEts> fitted;
    try {
        fitted = ets::fit(series, spec);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::TooShort) throw;
        for (const auto& alt : simpler_variants(spec)) {
            try {
                fitted = ets::fit(series, alt);
                log.length_fallback = alt.code();
                log.final_spec = alt.code();
                break;
            } catch (const Error& inner) {
                if (inner.code() != ErrorCode::TooShort) throw;
            }
        }
        if (!fitted) throw;
    }
    log.degraded_fit = fitted->degraded;
    auto fc = ets::forecast(*fitted, h, confidence, n_paths, seed);
    const double select_seconds = seconds_since(t0);
    return Selection{fitted->spec, std::move(*fitted), std::move(fc), std::move(log), extract_seconds, select_seconds};
}

} // namespace etsfs::selector
