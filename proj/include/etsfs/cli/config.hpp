#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "etsfs/ets/model.hpp"
#include "etsfs/selector/selector.hpp"

namespace etsfs::cli {

inline constexpr int kConfigVersion = 1;

struct SimulateSettings {
    selector::SimulationPlan plan = selector::SimulationPlan::desk();
    /// period -> number of trailing points held out as "test"; empty = none.
    std::map<int, std::size_t> holdout;
};

struct ForecastSettings {
    /// 0 picks the per-period default horizon.
    std::size_t horizon = 0;
    double confidence = 0.95;
    std::size_t paths = 2000;
};

struct BenchmarkSettings {
    double confidence = 0.95;
    std::size_t paths = 2000;
    std::string bands = "1-2,3-4,5-6";
    ets::Criterion criterion = ets::Criterion::AICc;
};

struct EvaluateSettings {
    double alpha = 0.05;
    std::string bands = "1-2,3-4,5-6";
    std::size_t n_bins = 30;
};

/// Versioned JSON config. Every section is optional; unknown keys are
/// rejected with a Config error.
struct RunConfig {
    SimulateSettings simulate;
    selector::SelectorTrainConfig train;
    ForecastSettings forecast;
    BenchmarkSettings benchmark;
    EvaluateSettings evaluate;

    static RunConfig parse(const std::string& json_text);
    std::string to_json() const;
};

/// 6 / 8 / 18 for yearly / quarterly / monthly, 2 * period otherwise.
std::size_t default_horizon(int period);

int frequency_period(const std::string& name);

} // namespace etsfs::cli
