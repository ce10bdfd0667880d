#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "etsfs/core/time_series.hpp"

namespace etsfs::features {

inline constexpr std::size_t kNumFeatures = 59;
/// Bumped whenever names or ordering change; stored in trained models.
inline constexpr int kManifestVersion = 1;

/// Canonical feature names in extraction order (37 forecasting-oriented
/// features followed by the 22 catch22 statistics).
const std::array<std::string_view, kNumFeatures>& manifest();

/// Index of a feature name in the manifest; throws InvalidArgument if unknown.
std::size_t index_of(std::string_view name);

struct FeatureVector {
    std::array<double, kNumFeatures> values{};
    int manifest_version = kManifestVersion;
    /// Entries that came out non-finite and were replaced by 0.
    std::vector<std::size_t> sanitized;

    double operator[](std::size_t i) const { return values[i]; }
    double at(std::string_view name) const { return values[index_of(name)]; }
};

/// Minimum series length accepted by extract().
std::size_t min_length(int period);

/// Computes all features. Throws SeriesTooShort below min_length(period).
FeatureVector extract(const TimeSeries& series);

// --- building blocks, exposed for testing -----------------------------------

/// Rescales to zero mean and unit sample standard deviation; a constant input
/// becomes all zeros.
std::vector<double> zscore(std::span<const double> x);

struct StlDecomposition {
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> remainder;
};

/// Seasonal-trend decomposition by loess with a periodic seasonal window.
/// period < 2 (or too few cycles) yields a trend-only loess smooth with a zero
/// seasonal component.
StlDecomposition stl(std::span<const double> x, int period);

/// Local linear loess smooth with tricube weights over `window` neighbours.
std::vector<double> loess(std::span<const double> x, std::size_t window);

/// Each block writes its entries into the full-size array at their manifest
/// positions and leaves other entries untouched.
using FeatureArray = std::array<double, kNumFeatures>;
void acf_block(std::span<const double> x, int period, FeatureArray& out);
void stl_block(std::span<const double> x, int period, FeatureArray& out);
void stationarity_block(std::span<const double> x, int period, FeatureArray& out);
void catch22_block(std::span<const double> x, FeatureArray& out);

// individual statistics with standalone meaning
double kpss_level(std::span<const double> x);
double pp_z_alpha(std::span<const double> x);
double spectral_entropy(std::span<const double> x);
int crossing_points(std::span<const double> x);
int flat_spots(std::span<const double> x);
double hurst_rs(std::span<const double> x);

} // namespace etsfs::features
