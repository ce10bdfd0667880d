#pragma once

#include "etsfs/ets/model.hpp"

namespace etsfs::ets::detail {

/// Smoothing weights in the form the filter consumes. Absent components use
/// neutral values (beta = gamma = 0, phi = 1).
struct Smoothing {
    double alpha = 0.5;
    double beta = 0.0;
    double gamma = 0.0;
    double phi = 1.0;
};

inline Smoothing smoothing_of(const EtsParams& p) {
    return {p.alpha, p.beta.value_or(0.0), p.gamma.value_or(0.0), p.phi.value_or(1.0)};
}

inline EtsState initial_state(const EtsSpec& spec, const EtsParams& p) {
    EtsState st;
    st.level = p.level0;
    st.trend = p.trend0.value_or(0.0);
    if (spec.seasonal()) st.season = p.seasonal0;
    st.phase = 0;
    return st;
}

/// Level plus (damped) trend contribution for the next step.
inline double base_level(const EtsSpec& spec, const Smoothing& sm, const EtsState& st) {
    return spec.has_trend() ? st.level + sm.phi * st.trend : st.level;
}

inline double one_step_mean(const EtsSpec& spec, const Smoothing& sm, const EtsState& st) {
    const double q = base_level(spec, sm, st);
    switch (spec.season()) {
    case SeasonForm::None: return q;
    case SeasonForm::Additive: return q + st.season[st.phase];
    case SeasonForm::Multiplicative: return q * st.season[st.phase];
    }
    return q;
}

/// Error-correction update written in terms of the observation, which makes
/// it identical for additive and multiplicative errors.
inline void advance(const EtsSpec& spec, const Smoothing& sm, EtsState& st, double y) {
    const double q = base_level(spec, sm, st);
    double deseasonalized = y;
    double s = 0.0;
    if (spec.seasonal()) {
        s = st.season[st.phase];
        deseasonalized = spec.season() == SeasonForm::Additive ? y - s : y / s;
    }
    const double level = q + sm.alpha * (deseasonalized - q);
    if (spec.has_trend()) {
        const double damped = sm.phi * st.trend;
        st.trend = damped + (sm.beta / sm.alpha) * (level - st.level - damped);
    }
    if (spec.seasonal()) {
        const double target = spec.season() == SeasonForm::Additive ? y - q : y / q;
        st.season[st.phase] = s + sm.gamma * (target - s);
        st.phase = (st.phase + 1) % st.season.size();
    }
    st.level = level;
}

} // namespace etsfs::ets::detail
