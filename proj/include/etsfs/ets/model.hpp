#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "etsfs/core/time_series.hpp"
#include "etsfs/ets/spec.hpp"

namespace etsfs::ets {

/// Smoothing weights and initial states. Optional members must be present
/// exactly when the spec has the corresponding component.
struct EtsParams {
    double alpha = 0.5;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::optional<double> phi;
    double level0 = 0.0;
    std::optional<double> trend0;
    /// seasonal0[j] is the seasonal state used for observation j (mod period).
    std::vector<double> seasonal0;

    /// Throws InvalidParams when the parameters do not match the spec or lie
    /// outside the admissible region.
    void validate(const EtsSpec& spec) const;
};

inline constexpr double kPhiLower = 0.80;
inline constexpr double kPhiUpper = 0.98;

/// Filter state between observations. `phase` indexes the seasonal slot of
/// the next observation.
struct EtsState {
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> season;
    std::size_t phase = 0;
};

struct FittedEts {
    EtsSpec spec;
    EtsParams params;
    std::vector<double> fitted;     // one-step-ahead means
    std::vector<double> residuals;  // y - mu (additive error) or (y - mu) / mu
    double sigma2 = 0.0;            // innovation variance (MLE)
    double log_likelihood = 0.0;
    int n_params = 0;
    double aic = 0.0;
    double aicc = 0.0;
    double bic = 0.0;
    EtsState final_state;
    /// Set when the optimizer could not improve on the heuristic start.
    bool degraded = false;
    int evaluations = 0;
};

struct Forecast {
    std::vector<double> point;
    std::vector<double> lower;
    std::vector<double> upper;
    double alpha_level = 0.05;  // intervals have confidence 1 - alpha_level

    std::size_t horizon() const { return point.size(); }
};

enum class Criterion { AIC, AICc, BIC };

struct FitOptions {
    int max_evaluations = 2000;  // per Nelder-Mead run
    int restarts = 2;            // jittered restarts after the initial run
    double diameter_tol = 1e-8;
    double rel_tol = 1e-10;
};

/// Generates n observations from the state-space recursion with Gaussian
/// innovations of standard deviation noise_sd (relative for multiplicative
/// error). Bit-identical for identical arguments.
TimeSeries simulate(const EtsSpec& spec, const EtsParams& params, std::size_t n, double noise_sd,
                    std::uint64_t seed, std::string id = "sim");

/// Heuristic starting parameters and initial states for the spec.
EtsParams heuristic_params(const TimeSeries& series, const EtsSpec& spec);

/// Maximum-likelihood fit over the admissible region.
/// Throws TooShort, NonPositiveData, InvalidSpec.
FittedEts fit(const TimeSeries& series, const EtsSpec& spec, const FitOptions& options = {});

/// Runs the filter with fixed parameters (no optimization).
FittedEts evaluate(const TimeSeries& series, const EtsSpec& spec, const EtsParams& params);

/// Point path (innovations set to zero) and simulated percentile intervals.
Forecast forecast(const FittedEts& model, std::size_t h, double confidence = 0.95,
                  std::size_t n_paths = 5000, std::uint64_t seed = 0);

double criterion_value(const FittedEts& model, Criterion criterion);

struct IcCandidate {
    EtsSpec spec;
    std::optional<FittedEts> fit;  // empty when skipped
    std::string skipped_reason;
};

struct IcSelection {
    FittedEts best;
    std::vector<IcCandidate> candidates;
};

/// Fits every feasible applicable spec and keeps the minimum criterion;
/// ties go to fewer parameters, then taxonomy order. Throws NoFeasibleModel.
IcSelection rank_by_ic(const TimeSeries& series, Criterion criterion = Criterion::AICc,
                       const FitOptions& options = {});

inline FittedEts select_by_ic(const TimeSeries& series, Criterion criterion = Criterion::AICc,
                              const FitOptions& options = {}) {
    return rank_by_ic(series, criterion, options).best;
}

} // namespace etsfs::ets
