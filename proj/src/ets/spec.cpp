#include "etsfs/ets/spec.hpp"

#include <array>

#include "etsfs/core/error.hpp"

namespace etsfs::ets {

std::string_view code(ErrorForm e) { return e == ErrorForm::Additive ? "A" : "M"; }

std::string_view code(TrendForm t) {
    switch (t) {
    case TrendForm::None: return "N";
    case TrendForm::Additive: return "A";
    case TrendForm::Damped: return "Ad";
    }
    return "?";
}

std::string_view code(SeasonForm s) {
    switch (s) {
    case SeasonForm::None: return "N";
    case SeasonForm::Additive: return "A";
    case SeasonForm::Multiplicative: return "M";
    }
    return "?";
}

EtsSpec::EtsSpec(ErrorForm error, TrendForm trend, SeasonForm season, int period)
    : error_(error), trend_(trend), season_(season), period_(period) {
    if (period < 1) throw Error(ErrorCode::InvalidSpec, "period must be positive");
    if (!applicable(error, season))
        throw Error(ErrorCode::InvalidSpec, code() + " has infinite forecast variance");
    if (period == 1 && season != SeasonForm::None)
        throw Error(ErrorCode::InvalidSpec, code() + " is seasonal but period is 1");
}

EtsSpec EtsSpec::parse(std::string_view text, int period) {
    auto fail = [&](const char* why) {
        return Error(ErrorCode::InvalidSpec, "'" + std::string(text) + "': " + why);
    };
    if (text.size() < 3 || text.size() > 4) throw fail("expected E,T,S code such as ANN or MAdM");

    ErrorForm error;
    if (text.front() == 'A') error = ErrorForm::Additive;
    else if (text.front() == 'M') error = ErrorForm::Multiplicative;
    else throw fail("unknown error form");

    SeasonForm season;
    switch (text.back()) {
    case 'N': season = SeasonForm::None; break;
    case 'A': season = SeasonForm::Additive; break;
    case 'M': season = SeasonForm::Multiplicative; break;
    default: throw fail("unknown seasonal form");
    }

    const std::string_view t = text.substr(1, text.size() - 2);
    TrendForm trend;
    if (t == "N") trend = TrendForm::None;
    else if (t == "A") trend = TrendForm::Additive;
    else if (t == "Ad") trend = TrendForm::Damped;
    else if (t == "M" || t == "Md") throw fail("multiplicative trend models are not supported");
    else throw fail("unknown trend form");

    return EtsSpec(error, trend, season, period);
}

int EtsSpec::n_params() const {
    int k = 1 /* alpha */ + 1 /* level0 */ + 1 /* variance */;
    if (has_trend()) k += 2;
    if (damped()) k += 1;
    if (seasonal()) k += 1 + (period_ - 1);
    return k;
}

std::string EtsSpec::code() const {
    std::string s;
    s += ets::code(error_);
    s += ets::code(trend_);
    s += ets::code(season_);
    return s;
}

int EtsSpec::taxonomy_index() const {
    const int row = static_cast<int>(trend_);
    const int col = 3 * static_cast<int>(error_) + static_cast<int>(season_);
    return 6 * row + col;
}

std::vector<EtsSpec> applicable_specs(int period) {
    if (period < 1) throw Error(ErrorCode::InvalidSpec, "period must be positive");
    constexpr std::array trends{TrendForm::None, TrendForm::Additive, TrendForm::Damped};
    constexpr std::array errors{ErrorForm::Additive, ErrorForm::Multiplicative};
    constexpr std::array seasons{SeasonForm::None, SeasonForm::Additive, SeasonForm::Multiplicative};
    std::vector<EtsSpec> out;
    for (auto t : trends)
        for (auto e : errors)
            for (auto s : seasons) {
                if (!EtsSpec::applicable(e, s)) continue;
                if (period == 1 && s != SeasonForm::None) continue;
                out.emplace_back(e, t, s, period);
            }
    return out;
}

} // namespace etsfs::ets
