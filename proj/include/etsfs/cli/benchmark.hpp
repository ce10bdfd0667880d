#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "etsfs/cli/config.hpp"
#include "etsfs/cli/io.hpp"
#include "etsfs/eval/eval.hpp"
#include "etsfs/selector/selector.hpp"

namespace etsfs::cli {

inline const char* kFeatureBased = "feature-based";
inline const char* kInformationCriteria = "information-criteria";

/// Per-series interval seed derived from the run seed and the series id, so
/// results do not depend on batch order or composition.
std::uint64_t series_seed(std::uint64_t seed, const std::string& id);

struct BandMetrics {
    std::string band;
    double mase = 0.0, smape = 0.0, msis = 0.0;  // NaN when the scale is zero
};

struct MethodOutcome {
    std::optional<ets::EtsSpec> spec;
    ets::Forecast forecast;
    std::string error;  // non-empty when the method failed on this series
    std::vector<BandMetrics> metrics;
};

struct SeriesOutcome {
    std::string id;
    int period = 1;
    std::optional<ets::EtsSpec> truth;
    MethodOutcome feature_based;
    MethodOutcome ic;
};

struct MetricSummary {
    std::string method;
    std::string metric;  // MASE | sMAPE | MSIS
    std::string band;    // "all" or "a-b"
    eval::Summary summary;
};

struct DmBand {
    std::string band;
    std::size_t series = 0;
    std::optional<eval::DmResult> result;  // empty when degenerate or too few series
    std::string note;
};

struct BenchmarkTiming {
    double fb_wall = 0.0;
    double fb_extract = 0.0;  // summed over series
    double fb_select = 0.0;
    double ic_wall = 0.0;
    unsigned threads = 1;
};

struct BenchmarkReport {
    std::vector<SeriesOutcome> series;
    std::vector<MetricSummary> metrics;
    /// Pooled test across series on per-series band MASE; negative statistic
    /// favours the feature-based method.
    std::vector<DmBand> dm_pooled;
    /// Per-series tests over each full holdout window (absolute loss).
    double dm_better_pct = 0.0, dm_worse_pct = 0.0, dm_same_pct = 0.0, dm_degenerate_pct = 0.0;
    std::size_t compared = 0;
    std::size_t failed = 0;
    std::size_t zero_scale = 0;
    /// Whole-model accuracy against the "spec" labels when every series has one.
    std::optional<double> fb_recovery, ic_recovery;
    BenchmarkTiming timing;

    /// Primary result (no timing), deterministic for fixed inputs and seed.
    std::string to_json() const;
    std::string timing_json() const;
    /// id,method,spec,band,mase,smape,msis
    std::string metrics_csv() const;
    std::string table() const;
};

/// Runs feature-based selection and the information-criterion baseline on
/// every record with a non-empty "test" holdout (horizon = test length).
BenchmarkReport run_benchmark(const selector::SelectorModel& model, const std::vector<SeriesRecord>& records,
                              const BenchmarkSettings& settings, double alpha, std::uint64_t seed, unsigned threads);

} // namespace etsfs::cli
