#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace etsfs::ets {

enum class ErrorForm : std::uint8_t { Additive, Multiplicative };
enum class TrendForm : std::uint8_t { None, Additive, Damped };
enum class SeasonForm : std::uint8_t { None, Additive, Multiplicative };

std::string_view code(ErrorForm e);
std::string_view code(TrendForm t);
std::string_view code(SeasonForm s);

/// One of the 15 numerically stable ETS component triples together with the
/// seasonal period it is applied at. Construction validates both.
class EtsSpec {
public:
    /// Throws InvalidSpec for inapplicable triples (additive error with
    /// multiplicative seasonality) or inconsistent periods.
    EtsSpec(ErrorForm error, TrendForm trend, SeasonForm season, int period = 1);

    /// Parses the compact form ("ANN", "MAdM", ...). Multiplicative-trend
    /// codes ("MMN", "AMdA", ...) are recognised and rejected.
    static EtsSpec parse(std::string_view text, int period = 1);

    static bool applicable(ErrorForm error, SeasonForm season) {
        return !(error == ErrorForm::Additive && season == SeasonForm::Multiplicative);
    }

    ErrorForm error() const { return error_; }
    TrendForm trend() const { return trend_; }
    SeasonForm season() const { return season_; }
    int period() const { return period_; }

    bool has_trend() const { return trend_ != TrendForm::None; }
    bool damped() const { return trend_ == TrendForm::Damped; }
    bool seasonal() const { return season_ != SeasonForm::None; }
    /// True when fitting requires strictly positive data.
    bool needs_positive_data() const {
        return error_ == ErrorForm::Multiplicative || season_ == SeasonForm::Multiplicative;
    }

    /// Free parameters including initial states and the innovation variance.
    int n_params() const;

    std::string code() const;
    /// Row-major position in the taxonomy table (trend rows N, A, Ad; columns
    /// A-error N/A/M then M-error N/A/M). Used for deterministic tie-breaks.
    int taxonomy_index() const;

    friend bool operator==(const EtsSpec&, const EtsSpec&) = default;

private:
    ErrorForm error_;
    TrendForm trend_;
    SeasonForm season_;
    int period_;
};

/// All applicable specs for the period, in taxonomy order: 6 when period = 1,
/// otherwise 15.
std::vector<EtsSpec> applicable_specs(int period);

} // namespace etsfs::ets
