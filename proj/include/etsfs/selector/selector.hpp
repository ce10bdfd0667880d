#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "etsfs/core/rng.hpp"
#include "etsfs/core/time_series.hpp"
#include "etsfs/ets/model.hpp"
#include "etsfs/features/features.hpp"
#include "etsfs/gbdt/gbdt.hpp"

namespace etsfs::selector {

// ---- class label sets ------------------------------------------------------

inline const std::vector<std::string> kErrorClasses{"A", "M"};
inline const std::vector<std::string> kTrendClasses{"A", "Ad", "N"};
inline const std::vector<std::string> kSeasonClasses{"A", "M", "N"};

int error_label(ets::ErrorForm e);
int trend_label(ets::TrendForm t);
int season_label(ets::SeasonForm s);
ets::ErrorForm error_form(int label);
ets::TrendForm trend_form(int label);
ets::SeasonForm season_form(int label);

// ---- simulation ------------------------------------------------------------

struct FrequencyBlock {
    int period = 1;
    std::size_t count = 0;
    int min_length = 19;
    int max_length = 100;
};

struct SimulationPlan {
    std::vector<FrequencyBlock> blocks;
    double alpha_lo = 0.05, alpha_hi = 0.95;
    /// beta = U(frac_lo, frac_hi) * alpha, gamma = U(frac_lo, frac_hi) * (1 - alpha)
    double frac_lo = 0.05, frac_hi = 0.95;
    double phi_lo = ets::kPhiLower, phi_hi = ets::kPhiUpper;
    double level_lo = 50.0, level_hi = 5000.0;
    double trend_lo = -2.0, trend_hi = 2.0;
    /// Seasonal amplitude (fraction of level for additive seasonality).
    double season_amp_lo = 0.1, season_amp_hi = 0.5;
    /// Additive error sd as a fraction of level0.
    double add_noise_lo = 0.01, add_noise_hi = 0.10;
    /// Relative error sd for multiplicative error.
    double mult_noise_lo = 0.01, mult_noise_hi = 0.05;
    int max_retries = 100;

    /// Throws Config when a block or sampler range is invalid.
    void validate() const;

    /// 600 yearly, 600 quarterly and 1200 monthly series.
    static SimulationPlan desk();
    /// Desk plan with every block count multiplied by `factor` (rounded).
    static SimulationPlan scaled(double factor);
};

/// Splits `total` series over `n_models` models; the first `total % n_models`
/// models get one extra.
std::vector<std::size_t> model_counts(std::size_t total, std::size_t n_models);

struct LabeledSeries {
    TimeSeries series;
    ets::EtsSpec spec;
    ets::EtsParams params;
    double noise_sd = 0.0;
};

struct Corpus {
    std::vector<LabeledSeries> items;
    /// Fingerprint over ids, periods, labels and values.
    std::uint64_t digest = 0;
    /// Draws discarded because a multiplicative model produced non-positive data.
    std::size_t resampled = 0;
};

/// Draws random parameters for `spec` from the plan's samplers.
ets::EtsParams sample_params(const ets::EtsSpec& spec, const SimulationPlan& plan, Rng& rng, double* noise_sd);

Corpus build_corpus(const SimulationPlan& plan, std::uint64_t seed, unsigned threads = 1);
std::uint64_t corpus_digest(const std::vector<LabeledSeries>& items);

// ---- model -----------------------------------------------------------------

struct SelectorModel {
    gbdt::TreeEnsemble f_e;
    gbdt::TreeEnsemble f_t;
    gbdt::TreeEnsemble f_s;
    int manifest_version = features::kManifestVersion;
    std::uint64_t corpus_digest = 0;

    std::vector<std::byte> save() const;
    /// Throws CorruptArtifact, VersionMismatch.
    static SelectorModel load(std::span<const std::byte> bytes);
};

inline constexpr std::uint32_t kSelectorFormatVersion = 1;

struct ComponentPrediction {
    std::array<double, 2> p_error{};
    std::array<double, 3> p_trend{};
    std::array<double, 3> p_season{};
};

/// Throws ManifestMismatch if the vector's manifest version differs from the
/// model's.
ComponentPrediction predict_components(const SelectorModel& model, const features::FeatureVector& fv);

struct SelectorTrainConfig {
    gbdt::TrainConfig error = gbdt::TrainConfig::error_classifier();
    gbdt::TrainConfig trend = gbdt::TrainConfig::trend_classifier();
    gbdt::TrainConfig season = gbdt::TrainConfig::season_classifier();
    double train_fraction = 0.8;
    std::uint64_t split_seed = 2024;
    unsigned threads = 1;
    /// Caps every classifier's num_boost_round when positive.
    int max_rounds = 0;
};

struct ComponentAccuracy {
    double error = 0.0;
    double trend = 0.0;
    double season = 0.0;
    /// All three components right (argmax prediction, before any checks).
    double whole = 0.0;
};

struct SplitDiagnostics {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    ComponentAccuracy train;
    ComponentAccuracy test;
    std::vector<std::size_t> train_index;
    std::vector<std::size_t> test_index;
};

/// Training rows: one feature vector and one generating spec per series.
struct TrainingSet {
    std::vector<std::string> ids;
    std::vector<features::FeatureVector> features;
    std::vector<ets::EtsSpec> specs;
    std::uint64_t digest = 0;
};

/// Extracts features for every corpus series (in parallel) and keeps labels.
/// Errors carry the failing series id.
TrainingSet featurize(const Corpus& corpus, unsigned threads = 1);

enum class Component { Error, Trend, Season };

/// Trains one component classifier on the given rows. Throws SingleClass when
/// the rows carry fewer than two distinct labels for that component.
gbdt::TreeEnsemble train_component(Component component, const TrainingSet& data,
                                   std::span<const std::size_t> rows, const gbdt::TrainConfig& config);

/// Fits the three classifiers on a seeded train_fraction split; the rest is
/// held out for the diagnostics. Throws SingleClass when a component task has
/// fewer than two classes in the training split.
std::pair<SelectorModel, SplitDiagnostics> train_selector(const TrainingSet& data, const SelectorTrainConfig& config);

/// Deterministic train/test split of n rows.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                           std::uint64_t seed);

// ---- check and adjust ------------------------------------------------------

struct AdjustmentStep {
    int check = 0;
    std::string before;
    std::string after;
};

struct AdjustmentLog {
    std::string id;
    std::string initial;
    std::string final_spec;
    std::vector<AdjustmentStep> steps;
    /// Set by select_and_forecast when the fit could not improve on its start.
    bool degraded_fit = false;
    /// Set when the series was too short for the selected spec and a simpler
    /// one was fitted.
    std::optional<std::string> length_fallback;

    std::string to_json() const;
};

std::pair<ets::EtsSpec, AdjustmentLog> check_and_adjust(const ComponentPrediction& pred, int period,
                                                        bool has_nonpositive, std::size_t length);

struct Selection {
    ets::EtsSpec spec;
    ets::FittedEts fit;
    ets::Forecast forecast;
    AdjustmentLog log;
    double extract_seconds = 0.0;
    double select_seconds = 0.0;
};

/// extract -> predict -> check_and_adjust -> fit -> forecast.
Selection select_and_forecast(const SelectorModel& model, const TimeSeries& series, std::size_t h,
                              double confidence = 0.95, std::uint64_t seed = 0, std::size_t n_paths = 2000);

} // namespace etsfs::selector
